//! Signed distance, the boundary frame (L, N), pairing brackets and quadrature grids.

use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::quadrature::gauss_legendre;
use crate::{Error, Result, C64, PI};

/// A point of C² = R⁴.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointC2 {
    pub z1: C64,
    pub z2: C64,
}

impl PointC2 {
    pub const fn new(z1: C64, z2: C64) -> Self {
        Self { z1, z2 }
    }

    pub fn real(x: [f64; 4]) -> Self {
        Self::new(C64::new(x[0], x[1]), C64::new(x[2], x[3]))
    }

    pub fn to_real(self) -> [f64; 4] {
        [self.z1.re, self.z1.im, self.z2.re, self.z2.im]
    }

    pub fn norm_sqr(self) -> f64 {
        self.z1.norm_sqr() + self.z2.norm_sqr()
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn conj(self) -> Self {
        Self::new(self.z1.conj(), self.z2.conj())
    }

    /// Σ z_i conj(w_i).
    pub fn hdot(self, w: Self) -> C64 {
        self.z1 * w.z1.conj() + self.z2 * w.z2.conj()
    }

    /// Euclidean dot product in R⁴.
    pub fn rdot(self, w: Self) -> f64 {
        self.hdot(w).re
    }

    pub fn dist_sqr(self, w: Self) -> f64 {
        (self - w).norm_sqr()
    }

    pub fn scale(self, a: f64) -> Self {
        Self::new(self.z1 * a, self.z2 * a)
    }

    pub fn normalized(self) -> Self {
        self.scale(1.0 / self.norm())
    }

    pub fn as_array(self) -> [C64; 2] {
        [self.z1, self.z2]
    }
}

impl Add for PointC2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.z1 + o.z1, self.z2 + o.z2)
    }
}

impl Sub for PointC2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.z1 - o.z1, self.z2 - o.z2)
    }
}

impl Neg for PointC2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.z1, -self.z2)
    }
}

impl Mul<PointC2> for f64 {
    type Output = PointC2;
    fn mul(self, p: PointC2) -> PointC2 {
        p.scale(self)
    }
}

/// Hermitian metric with (∂/∂z_i, ∂/∂z_i) = 1/2.
pub fn metric(a: [C64; 2], b: [C64; 2]) -> C64 {
    0.5 * (a[0] * b[0].conj() + a[1] * b[1].conj())
}

/// Coefficients of L and N on ∂/∂z₁, ∂/∂z₂.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub l: [C64; 2],
    pub n: [C64; 2],
}

impl Frame {
    /// Basis change matrix taking standard coefficients (s, t) to frame coefficients (u₁, u₂).
    ///
    /// Rows are the conjugated coefficients of L and N, so the matrix is unitary.
    pub fn to_frame_matrix(&self) -> [[C64; 2]; 2] {
        [
            [self.l[0].conj(), self.l[1].conj()],
            [self.n[0].conj(), self.n[1].conj()],
        ]
    }

    pub fn std_to_frame(&self, st: [C64; 2]) -> [C64; 2] {
        let m = self.to_frame_matrix();
        [
            m[0][0] * st[0] + m[0][1] * st[1],
            m[1][0] * st[0] + m[1][1] * st[1],
        ]
    }

    pub fn frame_to_std(&self, u: [C64; 2]) -> [C64; 2] {
        [
            self.l[0] * u[0] + self.n[0] * u[1],
            self.l[1] * u[0] + self.n[1] * u[1],
        ]
    }
}

/// A domain described by its signed distance function.
pub trait Geometry: Sync {
    fn delta(&self, z: PointC2) -> f64;

    /// (∂δ/∂z̄₁, ∂δ/∂z̄₂). Since δ is real, ∂δ/∂z_i is the conjugate.
    fn dbar_delta(&self, z: PointC2) -> Result<[C64; 2]>;

    /// |∇δ| in R⁴.
    fn grad_norm(&self, z: PointC2) -> Result<f64> {
        let g = self.dbar_delta(z)?;
        Ok(2.0 * (g[0].norm_sqr() + g[1].norm_sqr()).sqrt())
    }

    fn frame(&self, z: PointC2) -> Result<Frame> {
        let g = self.dbar_delta(z)?;
        Ok(Frame {
            l: [2.0 * g[1].conj(), -2.0 * g[0].conj()],
            n: [2.0 * g[0], 2.0 * g[1]],
        })
    }
}

/// The unit ball, δ = |z| − 1.
#[derive(Clone, Copy, Debug, Default)]
pub struct Ball;

impl Geometry for Ball {
    fn delta(&self, z: PointC2) -> f64 {
        z.norm() - 1.0
    }

    fn dbar_delta(&self, z: PointC2) -> Result<[C64; 2]> {
        let r = z.norm();
        if r == 0.0 {
            return Err(Error::Origin);
        }
        Ok([z.z1 / (2.0 * r), z.z2 / (2.0 * r)])
    }
}

/// Any user-supplied δ, differentiated by central differences.
pub struct FdGeometry<F> {
    pub delta: F,
    pub step: f64,
}

impl<F: Fn(PointC2) -> f64 + Sync> FdGeometry<F> {
    pub fn new(delta: F) -> Self {
        Self { delta, step: 1e-5 }
    }
}

impl<F: Fn(PointC2) -> f64 + Sync> Geometry for FdGeometry<F> {
    fn delta(&self, z: PointC2) -> f64 {
        (self.delta)(z)
    }

    fn dbar_delta(&self, z: PointC2) -> Result<[C64; 2]> {
        let x = z.to_real();
        let h = self.step;
        let mut g = [0.0; 4];
        for (k, gk) in g.iter_mut().enumerate() {
            let mut p = x;
            let mut m = x;
            p[k] += h;
            m[k] -= h;
            *gk = ((self.delta)(PointC2::real(p)) - (self.delta)(PointC2::real(m))) / (2.0 * h);
        }
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::Origin);
        }
        Ok([0.5 * C64::new(g[0], g[1]), 0.5 * C64::new(g[2], g[3])])
    }
}

pub fn signed_distance(z: PointC2) -> f64 {
    Ball.delta(z)
}

pub fn frame_at(z: PointC2) -> Result<Frame> {
    Ball.frame(z)
}

/// Unitary frame matrix at a point of the ball, rows conj(L), conj(N).
pub fn frame_matrix(z: PointC2) -> Result<[[C64; 2]; 2]> {
    Ok(frame_at(z)?.to_frame_matrix())
}

/// One argument of a pairing bracket.
#[derive(Clone, Copy, Debug)]
pub enum Slot {
    /// The field L at a point.
    L(PointC2),
    /// The field N at a point.
    N(PointC2),
    /// A displacement vector, paired without the metric factor.
    Disp([C64; 2]),
}

/// ⟨a·b⟩. Two fields pair through the metric; a field against a displacement uses
/// the plain Hermitian sum, mirroring the conventions of the kernel formulas.
pub fn bracket(geom: &dyn Geometry, a: Slot, b: Slot) -> Result<C64> {
    let coef = |s: Slot| -> Result<([C64; 2], bool)> {
        Ok(match s {
            Slot::L(p) => (geom.frame(p)?.l, true),
            Slot::N(p) => (geom.frame(p)?.n, true),
            Slot::Disp(d) => (d, false),
        })
    };
    let (x, fx) = coef(a)?;
    let (y, fy) = coef(b)?;
    let sum = x[0] * y[0].conj() + x[1] * y[1].conj();
    Ok(if fx && fy { 0.5 * sum } else { sum })
}

pub fn disp(z: PointC2, w: PointC2) -> [C64; 2] {
    (z - w).as_array()
}

/// (w̄ − z̄)^⊥ = (w̄₂ − z̄₂, z̄₁ − w̄₁).
pub fn perp_bar(w: PointC2, z: PointC2) -> [C64; 2] {
    let d = (w - z).conj();
    [d.z2, -d.z1]
}

/// Named brackets between a target z and a source w.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pairing {
    /// ⟨N_z·N_w⟩
    NN,
    /// ⟨L_z·L_w⟩
    LL,
    /// ⟨N_z·L_w⟩
    NL,
    /// ⟨L_z·N_w⟩
    LN,
    /// ⟨N_z·(z−w)⟩
    NDisp,
    /// ⟨L_z·(z−w)⟩
    LDisp,
    /// ⟨(w−z)·N_z⟩
    DispN,
    /// ⟨(w−z)·L_z⟩
    DispL,
    /// ⟨N_z·(w̄−z̄)^⊥⟩
    NPerp,
    /// ⟨L_z·(w̄−z̄)^⊥⟩
    LPerp,
    /// ⟨(w̄−z̄)^⊥·N_z⟩
    PerpN,
    /// ⟨(w̄−z̄)^⊥·L_z⟩
    PerpL,
}

impl Pairing {
    pub const ALL: [Pairing; 12] = [
        Pairing::NN,
        Pairing::LL,
        Pairing::NL,
        Pairing::LN,
        Pairing::NDisp,
        Pairing::LDisp,
        Pairing::DispN,
        Pairing::DispL,
        Pairing::NPerp,
        Pairing::LPerp,
        Pairing::PerpN,
        Pairing::PerpL,
    ];

    pub fn parse(name: &str) -> Result<Self> {
        let p = match name {
            "N.N" => Pairing::NN,
            "L.L" => Pairing::LL,
            "N.L" => Pairing::NL,
            "L.N" => Pairing::LN,
            "N.(z-w)" => Pairing::NDisp,
            "L.(z-w)" => Pairing::LDisp,
            "(w-z).N" => Pairing::DispN,
            "(w-z).L" => Pairing::DispL,
            "N.perp" => Pairing::NPerp,
            "L.perp" => Pairing::LPerp,
            "perp.N" => Pairing::PerpN,
            "perp.L" => Pairing::PerpL,
            _ => {
                return Err(Error::Unknown {
                    kind: "pairing",
                    name: name.to_string(),
                    expected: "N.N, L.L, N.L, L.N, N.(z-w), L.(z-w), (w-z).N, (w-z).L, N.perp, L.perp, perp.N, perp.L".into(),
                })
            }
        };
        Ok(p)
    }
}

pub fn pairing(geom: &dyn Geometry, kind: Pairing, z: PointC2, w: PointC2) -> Result<C64> {
    use Slot::*;
    let (a, b) = match kind {
        Pairing::NN => (N(z), N(w)),
        Pairing::LL => (L(z), L(w)),
        Pairing::NL => (N(z), L(w)),
        Pairing::LN => (L(z), N(w)),
        Pairing::NDisp => (N(z), Disp(disp(z, w))),
        Pairing::LDisp => (L(z), Disp(disp(z, w))),
        Pairing::DispN => (Disp(disp(w, z)), N(z)),
        Pairing::DispL => (Disp(disp(w, z)), L(z)),
        Pairing::NPerp => (N(z), Disp(perp_bar(w, z))),
        Pairing::LPerp => (L(z), Disp(perp_bar(w, z))),
        Pairing::PerpN => (Disp(perp_bar(w, z)), N(z)),
        Pairing::PerpL => (Disp(perp_bar(w, z)), L(z)),
    };
    bracket(geom, a, b)
}

/// Orthonormal tangent basis of S³ at a unit vector x ∈ R⁴. The first vector is iz.
pub fn tangent_basis(z: PointC2) -> [PointC2; 3] {
    let x = z.to_real();
    [
        PointC2::real([-x[1], x[0], -x[3], x[2]]),
        PointC2::real([-x[2], x[3], x[0], -x[1]]),
        PointC2::real([-x[3], -x[2], x[1], x[0]]),
    ]
}

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Grid coordinates ζ = V⁻¹z with V = [[1, 1], [1, −1]]/√2 (V is its own inverse).
pub fn to_grid_coords(z: PointC2) -> PointC2 {
    PointC2::new(SQRT_HALF * (z.z1 + z.z2), SQRT_HALF * (z.z1 - z.z2))
}

pub fn from_grid_coords(zeta: PointC2) -> PointC2 {
    to_grid_coords(zeta)
}

/// Resolution of the Hopf product grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Gauss–Legendre nodes in the polar angle χ ∈ [0, π/2]; odd.
    pub n_chi: usize,
    /// Equispaced nodes in each of the two periodic angles; even.
    pub n_phi: usize,
}

impl GridSpec {
    pub fn new(n_chi: usize, n_phi: usize) -> Self {
        Self { n_chi, n_phi }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chi < 3 || self.n_chi % 2 == 0 {
            return Err(Error::Config(format!(
                "n_chi must be odd and at least 3, got {}",
                self.n_chi
            )));
        }
        if self.n_phi < 4 || self.n_phi % 2 == 1 {
            return Err(Error::Config(format!(
                "n_phi must be even and at least 4, got {}",
                self.n_phi
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_chi * self.n_phi * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Hopf-coordinate product rule on S³.
///
/// In grid coordinates ζ = (cos χ e^{iφ₁}, sin χ e^{iφ₂}) with dσ = sin χ cos χ dχ dφ₁ dφ₂.
/// The grid is rotated so that χ = π/4, φ₁ = φ₂ = 0 lands on (1, 0).
#[derive(Clone, Debug)]
pub struct BoundaryGrid {
    pub spec: GridSpec,
    pub nodes: Vec<PointC2>,
    pub weights: Vec<f64>,
    pub frames: Vec<Frame>,
    /// Node set closed under (z₁, z₂) → (z₁, −z₂).
    pub symmetric: bool,
    pub chi: Vec<f64>,
    chi_bary: Vec<f64>,
}

impl BoundaryGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let (chi, wchi) = gauss_legendre(spec.n_chi, 0.0, 0.5 * PI);
        let dphi = 2.0 * PI / spec.n_phi as f64;
        let mut nodes = Vec::with_capacity(spec.len());
        let mut weights = Vec::with_capacity(spec.len());
        for (a, &x) in chi.iter().enumerate() {
            for j1 in 0..spec.n_phi {
                for j2 in 0..spec.n_phi {
                    let zeta = PointC2::new(
                        C64::from_polar(x.cos(), j1 as f64 * dphi),
                        C64::from_polar(x.sin(), j2 as f64 * dphi),
                    );
                    nodes.push(from_grid_coords(zeta));
                    weights.push(wchi[a] * x.sin() * x.cos() * dphi * dphi);
                }
            }
        }
        let frames = nodes
            .iter()
            .map(|&z| frame_at(z))
            .collect::<Result<Vec<_>>>()?;
        // barycentric weights for Lagrange interpolation on the χ nodes
        let chi_bary = (0..chi.len())
            .map(|j| {
                1.0 / (0..chi.len())
                    .filter(|&k| k != j)
                    .map(|k| chi[j] - chi[k])
                    .product::<f64>()
            })
            .collect();
        let mut grid = Self {
            spec,
            nodes,
            weights,
            frames,
            symmetric: false,
            chi,
            chi_bary,
        };
        grid.symmetric = grid.check_reflection_closure();
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index(&self, a: usize, j1: usize, j2: usize) -> usize {
        (a * self.spec.n_phi + j1) * self.spec.n_phi + j2
    }

    /// Index of the node (1, 0).
    pub fn pole_index(&self) -> usize {
        self.index(self.spec.n_chi / 2, 0, 0)
    }

    pub fn nearest(&self, z: PointC2) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, &p) in self.nodes.iter().enumerate() {
            let d = p.dist_sqr(z);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    fn check_reflection_closure(&self) -> bool {
        self.nodes.iter().all(|&p| {
            let q = PointC2::new(p.z1, -p.z2);
            self.nodes[self.nearest(q)].dist_sqr(q) < 1e-24
        })
    }

    pub fn integrate<F: Fn(PointC2) -> C64>(&self, f: F) -> C64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| f(p) * w)
            .sum()
    }

    /// Tensor interpolation weights at an arbitrary point of S³.
    pub fn stencil(&self, w: PointC2) -> Stencil {
        let zeta = to_grid_coords(w);
        let chi = zeta.z2.norm().atan2(zeta.z1.norm());
        let phi1 = if zeta.z1.norm() > 0.0 {
            zeta.z1.arg()
        } else {
            0.0
        };
        let phi2 = if zeta.z2.norm() > 0.0 {
            zeta.z2.arg()
        } else {
            0.0
        };
        Stencil {
            chi: lagrange_weights(&self.chi, &self.chi_bary, chi),
            phi1: trig_weights(self.spec.n_phi, phi1),
            phi2: trig_weights(self.spec.n_phi, phi2),
        }
    }

    /// Spectral interpolant of nodal values at w.
    pub fn interpolate(&self, values: &[[C64; 2]], w: PointC2) -> [C64; 2] {
        let st = self.stencil(w);
        let mut out = [C64::new(0.0, 0.0); 2];
        for (a, &ca) in st.chi.iter().enumerate() {
            for (j1, &c1) in st.phi1.iter().enumerate() {
                let c = ca * c1;
                for (j2, &c2) in st.phi2.iter().enumerate() {
                    let v = values[self.index(a, j1, j2)];
                    out[0] += v[0] * (c * c2);
                    out[1] += v[1] * (c * c2);
                }
            }
        }
        out
    }

    /// CSV: four real coordinates, weight, then L and N as real/imaginary pairs.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "x0", "x1", "x2", "x3", "weight", "l1_re", "l1_im", "l2_re", "l2_im", "n1_re", "n1_im",
            "n2_re", "n2_im",
        ])?;
        for ((p, w), f) in self.nodes.iter().zip(&self.weights).zip(&self.frames) {
            let x = p.to_real();
            let mut rec: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
            rec.push(format!("{w:.17e}"));
            for c in f.l.iter().chain(f.n.iter()) {
                rec.push(format!("{:.17e}", c.re));
                rec.push(format!("{:.17e}", c.im));
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Separable interpolation weights: value ≈ Σ chi[a]·phi1[j1]·phi2[j2]·f[a, j1, j2].
#[derive(Clone, Debug)]
pub struct Stencil {
    pub chi: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
}

fn lagrange_weights(nodes: &[f64], bary: &[f64], x: f64) -> Vec<f64> {
    if let Some(k) = nodes.iter().position(|&t| t == x) {
        let mut out = vec![0.0; nodes.len()];
        out[k] = 1.0;
        return out;
    }
    let terms: Vec<f64> = nodes.iter().zip(bary).map(|(&t, &b)| b / (x - t)).collect();
    let s: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / s).collect()
}

/// Cardinal functions of trigonometric interpolation on n (even) equispaced nodes.
fn trig_weights(n: usize, phi: f64) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|j| {
            let d = phi - j as f64 * h;
            let half = 0.5 * d;
            let s = half.sin();
            if s.abs() < 1e-15 {
                if (0.5 * n as f64 * d).cos() > 0.0 {
                    1.0
                } else {
                    -1.0
                }
            } else {
                (n as f64 * half).sin() * half.cos() / (n as f64 * s)
            }
        })
        .collect()
}

/// Radial Gauss–Legendre × Hopf product rule on the solid ball.
#[derive(Clone, Debug)]
pub struct InteriorGrid {
    pub nodes: Vec<PointC2>,
    pub weights: Vec<f64>,
}

impl InteriorGrid {
    pub fn new(n_r: usize, sphere: GridSpec) -> Result<Self> {
        if n_r < 2 {
            return Err(Error::Config(format!("n_r must be at least 2, got {n_r}")));
        }
        let shell = BoundaryGrid::new(sphere)?;
        let (r, wr) = gauss_legendre(n_r, 0.0, 1.0);
        let mut nodes = Vec::with_capacity(n_r * shell.len());
        let mut weights = Vec::with_capacity(n_r * shell.len());
        for (&ri, &wi) in r.iter().zip(&wr) {
            for (&p, &ws) in shell.nodes.iter().zip(&shell.weights) {
                nodes.push(p.scale(ri));
                weights.push(wi * ri.powi(3) * ws);
            }
        }
        Ok(Self { nodes, weights })
    }

    pub fn integrate<F: Fn(PointC2) -> C64>(&self, f: F) -> C64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| f(p) * w)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_weights_reproduce_low_modes() {
        let n = 8;
        let h = 2.0 * PI / n as f64;
        let phi = 0.37;
        let w = trig_weights(n, phi);
        for k in 0..4 {
            let interp: f64 = (0..n).map(|j| w[j] * (k as f64 * j as f64 * h).cos()).sum();
            assert!((interp - (k as f64 * phi).cos()).abs() < 1e-13, "mode {k}");
        }
    }

    #[test]
    fn pole_is_a_node() {
        let g = BoundaryGrid::new(GridSpec::new(5, 8)).unwrap();
        let p = g.nodes[g.pole_index()];
        assert!(p.dist_sqr(PointC2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))) < 1e-28);
        assert!(g.symmetric);
    }
}
