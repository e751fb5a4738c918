//! Fundamental solutions, the Newton potential and the single- and double-layer
//! potentials of the unit ball.
//!
//! The Newton term uses G₀ with Δ(G₀f) = f. Layer potentials use the matrix solution
//! of □ in the frame basis, G(z,w) = M(z)M(w)†/(4π²|z−w|²), so that in the standard
//! basis SLφ(x) = ∫ M(w)†φ(w)/(4π²|x−w|²) dσ_w. With these conventions a form u
//! satisfies u = G₀(Δu) + SL(Bu) − DL(γu) inside the ball.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::forms::{conormal_b_from_std_jets, frame_to_std, std_to_frame, Basis, BoundaryField, Form01};
use crate::geometry::{BoundaryGrid, InteriorGrid};
use crate::jet::Jet1;
use crate::quadrature::{polar_rule, volume_rays, AlphaPanels, PointRule, S2Rule, VolumeRuleSpec};
use crate::{Error, PointC2, Result, C64, PI};

const ZERO: C64 = C64::new(0.0, 0.0);

/// G₀(z,w) = −1/(4π²|z−w|²), the fundamental solution of the R⁴ Laplacian.
pub fn g0_kernel(z: PointC2, w: PointC2) -> Result<f64> {
    let d2 = z.dist_sqr(w);
    if d2 == 0.0 {
        return Err(Error::Coincident);
    }
    Ok(-1.0 / (4.0 * PI * PI * d2))
}

/// Matrix solution of □ between frame coefficients: M(z)M(w)†/(4π²|z−w|²).
pub fn g_box_frame(z: PointC2, w: PointC2) -> Result<[[C64; 2]; 2]> {
    let d2 = z.dist_sqr(w);
    if d2 == 0.0 {
        return Err(Error::Coincident);
    }
    let (n, m) = (z.normalized(), w.normalized());
    let mz = [[n.z2, -n.z1], [n.z1.conj(), n.z2.conj()]];
    let mw = [[m.z2, -m.z1], [m.z1.conj(), m.z2.conj()]];
    let s = 1.0 / (4.0 * PI * PI * d2);
    Ok(std::array::from_fn(|i| {
        std::array::from_fn(|j| (0..2).map(|k| mz[i][k] * mw[j][k].conj()).sum::<C64>() * s)
    }))
}

/// Value and Wirtinger gradient (∂₁, ∂₂, ∂̄₁, ∂̄₂) of a form in the standard basis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FormJet {
    pub value: [C64; 2],
    pub grad: [[C64; 4]; 2],
}

impl FormJet {
    pub fn frame_value(&self, z: PointC2) -> [C64; 2] {
        std_to_frame(z, self.value)
    }

    /// Bu from the standard-basis gradient.
    pub fn conormal(&self) -> [C64; 2] {
        conormal_b_from_std_jets(&self.grad[0], &self.grad[1])
    }

    fn add_scaled(&mut self, o: &FormJet, a: f64) {
        for k in 0..2 {
            self.value[k] += o.value[k] * a;
            for j in 0..4 {
                self.grad[k][j] += o.grad[k][j] * a;
            }
        }
    }
}

impl std::ops::Add for FormJet {
    type Output = FormJet;
    fn add(mut self, o: FormJet) -> FormJet {
        self.add_scaled(&o, 1.0);
        self
    }
}

impl std::ops::Sub for FormJet {
    type Output = FormJet;
    fn sub(mut self, o: FormJet) -> FormJet {
        self.add_scaled(&o, -1.0);
        self
    }
}

/// The datum f and its samples on an interior grid.
#[derive(Clone, Debug)]
pub struct VolumeData {
    pub form: Form01,
    pub samples: Vec<[C64; 2]>,
}

impl VolumeData {
    pub fn new(form: Form01, grid: &InteriorGrid) -> Result<Self> {
        let samples = grid
            .nodes
            .iter()
            .map(|&z| form.eval_in(Basis::Standard, z))
            .collect::<Result<Vec<_>>>()?;
        if samples
            .iter()
            .any(|v| !v.iter().all(|c| c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::Config("volume datum has non-finite samples".into()));
        }
        Ok(Self { form, samples })
    }

    /// Without interior samples, for pure evaluation.
    pub fn unsampled(form: Form01) -> Self {
        Self {
            form,
            samples: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.form.c.iter().all(|c| c.is_zero())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerRole {
    Single,
    Double,
}

/// A density on the boundary grid feeding SL or DL.
#[derive(Clone, Debug)]
pub struct LayerDensity {
    pub field: BoundaryField,
    pub role: LayerRole,
}

impl LayerDensity {
    pub fn single(field: BoundaryField) -> Self {
        Self {
            field,
            role: LayerRole::Single,
        }
    }

    pub fn double(field: BoundaryField) -> Self {
        Self {
            field,
            role: LayerRole::Double,
        }
    }
}

fn check_interior(z: PointC2) -> Result<()> {
    let r = z.norm();
    if r >= 1.0 || !r.is_finite() {
        return Err(Error::NotInterior(r));
    }
    Ok(())
}

fn newton_jet_with<F: Fn(PointC2) -> [C64; 2]>(f: F, x: PointC2, spec: &VolumeRuleSpec) -> FormJet {
    let xr = x.to_real();
    let mut val = [ZERO; 2];
    let mut grad_r = [[ZERO; 4]; 2];
    for ray in volume_rays(x, spec) {
        let mut s0 = [ZERO; 2];
        let mut s1 = [ZERO; 2];
        for (&rho, &wr) in ray.rho.iter().zip(&ray.rho_weights) {
            let y = PointC2::real(std::array::from_fn(|k| xr[k] + rho * ray.dir[k]));
            let fy = f(y);
            for k in 0..2 {
                s0[k] += fy[k] * (wr * rho);
                s1[k] += fy[k] * wr;
            }
        }
        for k in 0..2 {
            val[k] += s0[k] * (-ray.weight / (4.0 * PI * PI));
            for (j, g) in grad_r[k].iter_mut().enumerate() {
                *g += s1[k] * (-ray.weight * ray.dir[j] / (2.0 * PI * PI));
            }
        }
    }
    let i = C64::new(0.0, 1.0);
    let grad = grad_r.map(|g| {
        [
            0.5 * (g[0] - i * g[1]),
            0.5 * (g[2] - i * g[3]),
            0.5 * (g[0] + i * g[1]),
            0.5 * (g[2] + i * g[3]),
        ]
    });
    FormJet { value: val, grad }
}

/// G₀f and its gradient at a point of the closed ball, standard basis.
pub fn newton_jet(f: &VolumeData, x: PointC2, spec: &VolumeRuleSpec) -> Result<FormJet> {
    if x.norm() > 1.0 + 1e-12 {
        return Err(Error::NotInterior(x.norm()));
    }
    if f.is_zero() {
        return Ok(FormJet::default());
    }
    Ok(newton_jet_with(|y| f.form.eval_in(Basis::Standard, y).unwrap_or([ZERO; 2]), x, spec))
}

/// Newton potential at an interior point, returned in the requested basis.
///
/// The frame path integrates the frame matrix solution against frame coefficients of f.
pub fn newton_potential(f: &VolumeData, z: PointC2, basis: Basis, spec: &VolumeRuleSpec) -> Result<[C64; 2]> {
    check_interior(z)?;
    match basis {
        Basis::Standard => Ok(newton_jet(f, z, spec)?.value),
        Basis::Frame => {
            if z.norm() == 0.0 {
                return Err(Error::Origin);
            }
            let jet = newton_jet_with(
                |y| match f.form.eval_in(Basis::Frame, y) {
                    Ok(u) => frame_to_std(y, u),
                    Err(_) => [ZERO; 2],
                },
                z,
                spec,
            );
            Ok(std_to_frame(z, jet.value))
        }
    }
}

/// One-sided boundary values of the Newton potential: (γG₀f, BG₀f) at a boundary point.
pub fn newton_trace(f: &VolumeData, z: PointC2, spec: &VolumeRuleSpec) -> Result<([C64; 2], [C64; 2])> {
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!("trace point has |z| = {}", z.norm())));
    }
    let jet = newton_jet(f, z, spec)?;
    Ok((jet.frame_value(z), jet.conormal()))
}

pub(crate) fn coords(x: PointC2) -> [Jet1; 4] {
    let v = [x.z1, x.z2, x.z1.conj(), x.z2.conj()];
    std::array::from_fn(|k| {
        let mut d = [ZERO; 4];
        d[k] = C64::new(1.0, 0.0);
        Jet1 { v: v[k], d }
    })
}

fn recip(a: Jet1) -> Jet1 {
    let inv = a.v.inv();
    Jet1 {
        v: inv,
        d: a.d.map(|d| -d * inv * inv),
    }
}

fn sub_const(a: Jet1, c: C64) -> Jet1 {
    Jet1 { v: a.v - c, d: a.d }
}

/// Kernel of SL in the standard basis with its x-gradient: M(w)†/(4π²|x−w|²).
pub(crate) fn sl_kernel(x: &[Jet1; 4], w: PointC2) -> Result<[[Jet1; 2]; 2]> {
    let e: [Jet1; 4] = std::array::from_fn(|k| sub_const(x[k], [w.z1, w.z2, w.z1.conj(), w.z2.conj()][k]));
    let d2 = e[0] * e[2] + e[1] * e[3];
    if d2.v.norm() == 0.0 {
        return Err(Error::Coincident);
    }
    let g = recip(d2).scale(C64::new(1.0 / (4.0 * PI * PI), 0.0));
    let mh = [[w.z2.conj(), w.z1], [-w.z1.conj(), w.z2]];
    Ok(mh.map(|row| row.map(|m| g.scale(m))))
}

/// Kernel of DL in the standard basis with its x-gradient:
/// −[[conj(w₂−x₂), w₁−x₁], [−conj(w₁−x₁), w₂−x₂]]/(2π²|x−w|⁴).
pub(crate) fn dl_kernel(x: &[Jet1; 4], w: PointC2) -> Result<[[Jet1; 2]; 2]> {
    let wv = [w.z1, w.z2, w.z1.conj(), w.z2.conj()];
    // w − x as jets
    let e: [Jet1; 4] = std::array::from_fn(|k| {
        let mut j = x[k].scale(C64::new(-1.0, 0.0));
        j.v += wv[k];
        j
    });
    let d2 = e[0] * e[2] + e[1] * e[3];
    if d2.v.norm() == 0.0 {
        return Err(Error::Coincident);
    }
    let inv = recip(d2);
    let g = (inv * inv).scale(C64::new(-1.0 / (2.0 * PI * PI), 0.0));
    Ok([
        [e[3] * g, e[0] * g],
        [(e[2] * g).scale(C64::new(-1.0, 0.0)), e[1] * g],
    ])
}

/// Sum of a layer kernel against sampled densities, standard output with gradient.
fn layer_sum(role: LayerRole, x: PointC2, rule: &PointRule, density: &[[C64; 2]]) -> Result<FormJet> {
    let xj = coords(x);
    let mut out = FormJet::default();
    for ((&w, &wt), d) in rule.points.iter().zip(&rule.weights).zip(density) {
        let k = match role {
            LayerRole::Single => sl_kernel(&xj, w)?,
            LayerRole::Double => dl_kernel(&xj, w)?,
        };
        for i in 0..2 {
            for j in 0..2 {
                let c = d[j] * wt;
                out.value[i] += k[i][j].v * c;
                for m in 0..4 {
                    out.grad[i][m] += k[i][j].d[m] * c;
                }
            }
        }
    }
    Ok(out)
}

/// How layer potentials are discretized at a target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LayerQuadrature {
    /// Plain sum over the grid nodes.
    Grid,
    /// A polar rule centered at x/|x|, graded toward it on the scale 1 − |x|, with the
    /// density interpolated spectrally from the grid.
    Refined {
        n_near: usize,
        n_far: usize,
        s2_theta: usize,
        s2_az: usize,
    },
}

impl Default for LayerQuadrature {
    fn default() -> Self {
        Self::Refined {
            n_near: 12,
            n_far: 32,
            s2_theta: 10,
            s2_az: 20,
        }
    }
}

fn refined_rule(x: PointC2, q: &LayerQuadrature) -> Option<PointRule> {
    let LayerQuadrature::Refined {
        n_near,
        n_far,
        s2_theta,
        s2_az,
    } = *q
    else {
        return None;
    };
    let r = x.norm();
    let center = if r > 1e-12 {
        x.scale(1.0 / r)
    } else {
        PointC2::real([1.0, 0.0, 0.0, 0.0])
    };
    let h = (1.0 - r).max(1e-8);
    let alpha = if h < 0.25 {
        AlphaPanels::graded(0.0, h, n_near, n_far)
    } else {
        AlphaPanels::full(n_far)
    };
    Some(polar_rule(center, &alpha, &S2Rule::new(s2_theta, s2_az)))
}

/// Layer potential of a density with value and gradient, standard basis, at an
/// interior point.
pub fn layer_jet(density: &LayerDensity, grid: &BoundaryGrid, x: PointC2, q: &LayerQuadrature) -> Result<FormJet> {
    check_interior(x)?;
    if density.field.len() != grid.len() {
        return Err(Error::Config(format!(
            "density has {} nodes, grid has {}",
            density.field.len(),
            grid.len()
        )));
    }
    match refined_rule(x, q) {
        None => {
            let rule = PointRule {
                points: grid.nodes.clone(),
                weights: grid.weights.clone(),
            };
            layer_sum(density.role, x, &rule, &density.field.values)
        }
        Some(rule) => {
            let vals: Vec<[C64; 2]> = rule
                .points
                .iter()
                .map(|&w| grid.interpolate(&density.field.values, w))
                .collect();
            layer_sum(density.role, x, &rule, &vals)
        }
    }
}

/// Layer potential of an analytic frame density given as a closure.
pub fn layer_jet_analytic<F: Fn(PointC2) -> [C64; 2]>(
    role: LayerRole,
    density: F,
    x: PointC2,
    q: &LayerQuadrature,
) -> Result<FormJet> {
    check_interior(x)?;
    let rule = refined_rule(x, q).ok_or_else(|| Error::Config("analytic densities need a refined rule".into()))?;
    let vals: Vec<[C64; 2]> = rule.points.iter().map(|&w| density(w)).collect();
    layer_sum(role, x, &rule, &vals)
}

/// SLφ at an interior point, standard basis.
pub fn single_layer(phi: &LayerDensity, grid: &BoundaryGrid, z: PointC2, q: &LayerQuadrature) -> Result<[C64; 2]> {
    let single = LayerDensity::single(phi.field.clone());
    Ok(layer_jet(&single, grid, z, q)?.value)
}

/// DLψ at an interior point, standard basis.
pub fn double_layer(psi: &LayerDensity, grid: &BoundaryGrid, z: PointC2, q: &LayerQuadrature) -> Result<[C64; 2]> {
    let double = LayerDensity::double(psi.field.clone());
    Ok(layer_jet(&double, grid, z, q)?.value)
}

/// Settings for interior reconstruction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialOptions {
    pub volume: VolumeRuleSpec,
    pub layer: LayerQuadrature,
}

/// u = G₀f + SLφ − DLψ at an interior point, standard basis.
pub fn green_reconstruct(
    f: &VolumeData,
    psi: &LayerDensity,
    phi: &LayerDensity,
    grid: &BoundaryGrid,
    z: PointC2,
    opts: &PotentialOptions,
) -> Result<[C64; 2]> {
    check_interior(z)?;
    let g = newton_jet(f, z, &opts.volume)?.value;
    let s = single_layer(phi, grid, z, &opts.layer)?;
    let d = double_layer(psi, grid, z, &opts.layer)?;
    Ok([g[0] + s[0] - d[0], g[1] + s[1] - d[1]])
}

/// CSV dump of a field on interior points: coordinates, then s, t, u₁, u₂ as
/// real/imaginary pairs.
pub fn write_field_csv<W: Write>(out: W, points: &[PointC2], values: &[[C64; 2]]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "x0", "x1", "x2", "x3", "s_re", "s_im", "t_re", "t_im", "u1_re", "u1_im", "u2_re", "u2_im",
    ])?;
    for (&p, v) in points.iter().zip(values) {
        let fr = if p.norm() > 0.0 {
            std_to_frame(p, *v)
        } else {
            [C64::new(f64::NAN, f64::NAN); 2]
        };
        let mut row: Vec<String> = p.to_real().iter().map(|x| x.to_string()).collect();
        for c in v.iter().chain(fr.iter()) {
            row.push(c.re.to_string());
            row.push(c.im.to_string());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Interior points on a cubic lattice of spacing `step` inside radius `r_max`.
pub fn lattice(step: f64, r_max: f64) -> Vec<PointC2> {
    let n = (r_max / step).floor() as i64;
    let mut pts = Vec::new();
    for a in -n..=n {
        for b in -n..=n {
            for c in -n..=n {
                for d in -n..=n {
                    let p = PointC2::real([a, b, c, d].map(|k| k as f64 * step));
                    if p.norm() <= r_max {
                        pts.push(p);
                    }
                }
            }
        }
    }
    pts
}
