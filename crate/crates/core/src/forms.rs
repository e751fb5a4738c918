//! (0,q)-forms on the ball and the frame calculus: ∂̄, ∂̄*, □, γ and the conormal derivative B.
//!
//! Frame coefficients refer to (ω_L̄, ω_N̄), standard ones to (dz̄₁, dz̄₂). On the ball
//! ω_L̄ ∧ ω_N̄ = dz̄₁ ∧ dz̄₂, so top forms carry a single coefficient in either basis.
//! Norms: scalars weight 1, (0,1)-forms 2 per component, top forms 4.

use serde::{Deserialize, Serialize};

use crate::expr::Field;
use crate::geometry::{BoundaryGrid, Geometry};
use crate::jet::{Jet1, Jet2, VectorField};
use crate::{Error, PointC2, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Frame,
    Standard,
}

/// u = u₁ω_L̄ + u₂ω_N̄ (frame) or s dz̄₁ + t dz̄₂ (standard).
#[derive(Clone, Debug)]
pub struct Form01 {
    pub basis: Basis,
    pub c: [Field; 2],
}

/// Coefficient of ω_L̄ ∧ ω_N̄.
#[derive(Clone, Debug)]
pub struct TopForm {
    pub coef: Field,
}

impl Form01 {
    pub fn standard(s: Field, t: Field) -> Self {
        Self {
            basis: Basis::Standard,
            c: [s, t],
        }
    }

    pub fn frame(u1: Field, u2: Field) -> Self {
        Self {
            basis: Basis::Frame,
            c: [u1, u2],
        }
    }

    pub fn zero() -> Self {
        Self::standard(Field::zero(), Field::zero())
    }

    pub fn eval(&self, z: PointC2) -> [C64; 2] {
        [self.c[0].eval(z), self.c[1].eval(z)]
    }

    /// Coefficients in the requested basis at a point.
    pub fn eval_in(&self, basis: Basis, z: PointC2) -> Result<[C64; 2]> {
        let v = self.eval(z);
        if basis == self.basis {
            return Ok(v);
        }
        check_origin(z)?;
        Ok(match basis {
            Basis::Frame => std_to_frame(z, v),
            Basis::Standard => frame_to_std(z, v),
        })
    }

    pub fn to_basis(&self, basis: Basis) -> Form01 {
        change_basis(self, basis)
    }
}

fn check_origin(z: PointC2) -> Result<()> {
    if z.norm_sqr() == 0.0 {
        Err(Error::Origin)
    } else {
        Ok(())
    }
}

fn unit_normal(z: PointC2) -> [C64; 2] {
    let r = z.norm();
    [z.z1 / r, z.z2 / r]
}

/// (s, t) ↦ (u₁, u₂) = (n₂s − n₁t, n̄₁s + n̄₂t) with n = z/|z|.
pub fn std_to_frame(z: PointC2, st: [C64; 2]) -> [C64; 2] {
    let n = unit_normal(z);
    [
        n[1] * st[0] - n[0] * st[1],
        n[0].conj() * st[0] + n[1].conj() * st[1],
    ]
}

/// (u₁, u₂) ↦ (s, t) = (n̄₂u₁ + n₁u₂, −n̄₁u₁ + n₂u₂).
pub fn frame_to_std(z: PointC2, u: [C64; 2]) -> [C64; 2] {
    let n = unit_normal(z);
    [
        n[1].conj() * u[0] + n[0] * u[1],
        -n[0].conj() * u[0] + n[1] * u[1],
    ]
}

fn normal_fields() -> [Field; 2] {
    let rinv = Field::norm_sqr().sqrt().recip();
    [Field::z1() * rinv.clone(), Field::z2() * rinv]
}

pub fn change_basis(u: &Form01, target: Basis) -> Form01 {
    if u.basis == target {
        return u.clone();
    }
    let [n1, n2] = normal_fields();
    let [a, b] = u.c.clone();
    match target {
        Basis::Frame => Form01::frame(
            n2.clone() * a.clone() - n1.clone() * b.clone(),
            n1.conj() * a + n2.conj() * b,
        ),
        Basis::Standard => Form01::standard(
            n2.conj() * a.clone() + n1.clone() * b.clone(),
            -(n1.conj() * a) + n2 * b,
        ),
    }
}

/// Frame vector fields and the connection coefficient at one point, with first derivatives.
pub struct FrameJets {
    pub l: VectorField,
    pub n: VectorField,
    pub lbar: VectorField,
    pub nbar: VectorField,
    /// c = (L,[L,N]) = ([L,N],L) on the ball.
    pub c: Jet1,
}

impl FrameJets {
    pub fn at(z: PointC2) -> Result<Self> {
        check_origin(z)?;
        let rinv = Field::norm_sqr().sqrt().recip();
        let jet = |f: Field| (f * rinv.clone()).jet(z).first();
        let zero = Jet1::constant(C64::new(0.0, 0.0));
        let (z1, z2, zb1, zb2) = (Field::z1(), Field::z2(), Field::zb1(), Field::zb2());
        Ok(Self {
            l: VectorField {
                coef: [jet(zb2.clone()), jet(-zb1.clone()), zero, zero],
            },
            n: VectorField {
                coef: [jet(z1.clone()), jet(z2.clone()), zero, zero],
            },
            lbar: VectorField {
                coef: [zero, zero, jet(z2.clone()), jet(-z1.clone())],
            },
            nbar: VectorField {
                coef: [zero, zero, jet(zb1), jet(zb2)],
            },
            c: jet(Field::real(0.75)),
        })
    }
}

fn frame_jets_of(u: &Form01, z: PointC2) -> [Jet2; 2] {
    let f = change_basis(u, Basis::Frame);
    [f.c[0].jet(z), f.c[1].jet(z)]
}

/// ∂̄f = (L̄f)ω_L̄ + (N̄f)ω_N̄, frame coefficients.
pub fn dbar_scalar(f: &Field, z: PointC2) -> Result<[C64; 2]> {
    let fj = FrameJets::at(z)?;
    let j = f.jet(z);
    Ok([fj.lbar.apply(&j).v, fj.nbar.apply(&j).v])
}

fn dbar_top_jet(fj: &FrameJets, u: &[Jet2; 2]) -> Jet1 {
    let u1 = u[0].first();
    fj.lbar.apply(&u[1]) - fj.nbar.apply(&u[0]) - (fj.c * u1).scale(C64::new(2.0, 0.0))
}

fn dbar_star_jet(fj: &FrameJets, u: &[Jet2; 2]) -> Jet1 {
    let u2 = u[1].first();
    (fj.l.apply(&u[0]) + fj.n.apply(&u[1]) + (fj.c * u2).scale(C64::new(2.0, 0.0)))
        .scale(C64::new(-2.0, 0.0))
}

/// Coefficient of ω_L̄ ∧ ω_N̄ in ∂̄u: L̄u₂ − N̄u₁ − 2c u₁.
pub fn dbar_form(u: &Form01, z: PointC2) -> Result<C64> {
    let fj = FrameJets::at(z)?;
    Ok(dbar_top_jet(&fj, &frame_jets_of(u, z)).v)
}

/// ∂̄*u = −2(Lu₁ + Nu₂ + 2c u₂).
pub fn dbar_star_form(u: &Form01, z: PointC2) -> Result<C64> {
    let fj = FrameJets::at(z)?;
    Ok(dbar_star_jet(&fj, &frame_jets_of(u, z)).v)
}

/// ∂̄*(F ω_L̄∧ω_N̄) = 2(NF)ω_L̄ − 2(LF)ω_N̄.
pub fn dbar_star_top(f: &TopForm, z: PointC2) -> Result<[C64; 2]> {
    let fj = FrameJets::at(z)?;
    let j = f.coef.jet(z);
    Ok([2.0 * fj.n.apply(&j).v, -2.0 * fj.l.apply(&j).v])
}

/// ∂̄∂̄f through the frame formulas, including the connection term.
pub fn dbar_dbar_scalar(f: &Field, z: PointC2) -> Result<C64> {
    let fj = FrameJets::at(z)?;
    let j = f.jet(z);
    let u1 = fj.lbar.apply(&j);
    let u2 = fj.nbar.apply(&j);
    // second application needs derivatives of u₁, u₂, available to first order
    let lb_u2: C64 = fj.lbar.apply1(&u2);
    let nb_u1: C64 = fj.nbar.apply1(&u1);
    Ok(lb_u2 - nb_u1 - 2.0 * fj.c.v * u1.v)
}

/// □u = 2(∂̄∂̄* + ∂̄*∂̄)u, frame coefficients.
pub fn box_apply(u: &Form01, z: PointC2) -> Result<[C64; 2]> {
    let fj = FrameJets::at(z)?;
    let uj = frame_jets_of(u, z);
    let g = dbar_star_jet(&fj, &uj);
    let top = dbar_top_jet(&fj, &uj);
    let dg = [fj.lbar.apply1(&g), fj.nbar.apply1(&g)];
    let ds = [2.0 * fj.n.apply1(&top), -2.0 * fj.l.apply1(&top)];
    Ok([2.0 * (dg[0] + ds[0]), 2.0 * (dg[1] + ds[1])])
}

pub fn box_apply_std(u: &Form01, z: PointC2) -> Result<[C64; 2]> {
    Ok(frame_to_std(z, box_apply(u, z)?))
}

/// Bu from the frame formula: (2(N̄u₁ − L̄u₂) + 4c u₁, 2(Lu₁ + Nu₂) + 4c u₂).
pub fn conormal_b(u: &Form01, z: PointC2) -> Result<[C64; 2]> {
    let fj = FrameJets::at(z)?;
    let uj = frame_jets_of(u, z);
    let c4 = 4.0 * fj.c.v;
    Ok([
        2.0 * (fj.nbar.apply(&uj[0]).v - fj.lbar.apply(&uj[1]).v) + c4 * uj[0].v,
        2.0 * (fj.l.apply(&uj[0]).v + fj.n.apply(&uj[1]).v) + c4 * uj[1].v,
    ])
}

/// Bu from standard coefficients: (2(∂̄₂s − ∂̄₁t), 2(∂₁s + ∂₂t)).
pub fn conormal_b_from_std_jets(s: &[C64; 4], t: &[C64; 4]) -> [C64; 2] {
    [2.0 * (s[3] - t[2]), 2.0 * (s[0] + t[1])]
}

pub fn conormal_b_std(u: &Form01, z: PointC2) -> Result<[C64; 2]> {
    let st = change_basis(u, Basis::Standard);
    let s = st.c[0].jet(z);
    let t = st.c[1].jet(z);
    Ok(conormal_b_from_std_jets(&s.d, &t.d))
}

/// (L,[L,N]) from the exact commutator of the ball frame fields.
pub fn connection_coeff(z: PointC2) -> Result<C64> {
    let (l, comm) = commutator_ln(z)?;
    Ok(0.5 * (l[0] * comm[0].conj() + l[1] * comm[1].conj()))
}

/// ([L,N],N) from the exact commutator.
pub fn bracket_ln_n(z: PointC2) -> Result<C64> {
    let (_, comm) = commutator_ln(z)?;
    let n = unit_normal(z);
    Ok(0.5 * (comm[0] * n[0].conj() + comm[1] * n[1].conj()))
}

fn commutator_ln(z: PointC2) -> Result<([C64; 2], [C64; 2])> {
    let fj = FrameJets::at(z)?;
    let apply = |x: &VectorField, f: &Jet1| x.apply1(f);
    let comm = [
        apply(&fj.l, &fj.n.coef[0]) - apply(&fj.n, &fj.l.coef[0]),
        apply(&fj.l, &fj.n.coef[1]) - apply(&fj.n, &fj.l.coef[1]),
    ];
    Ok(([fj.l.coef[0].v, fj.l.coef[1].v], comm))
}

/// (L,[L,N]) with frames from any geometry, differentiated by central differences.
pub fn connection_coeff_fd(geom: &dyn Geometry, z: PointC2, h: f64) -> Result<C64> {
    let frame = geom.frame(z)?;
    // ∂_{z_k} of each frame coefficient
    let mut dl = [[C64::new(0.0, 0.0); 2]; 2];
    let mut dn = [[C64::new(0.0, 0.0); 2]; 2];
    let x = z.to_real();
    for k in 0..2 {
        let mut dx = [[C64::new(0.0, 0.0); 4]; 2];
        for (part, dpart) in dx.iter_mut().enumerate() {
            let mut p = x;
            let mut m = x;
            p[2 * k + part] += h;
            m[2 * k + part] -= h;
            let fp = geom.frame(PointC2::real(p))?;
            let fm = geom.frame(PointC2::real(m))?;
            for i in 0..2 {
                dpart[i] = (fp.l[i] - fm.l[i]) / (2.0 * h);
                dpart[2 + i] = (fp.n[i] - fm.n[i]) / (2.0 * h);
            }
        }
        for i in 0..2 {
            dl[k][i] = 0.5 * (dx[0][i] - C64::i() * dx[1][i]);
            dn[k][i] = 0.5 * (dx[0][2 + i] - C64::i() * dx[1][2 + i]);
        }
    }
    let comm: [C64; 2] = std::array::from_fn(|j| {
        (0..2)
            .map(|k| frame.l[k] * dn[k][j] - frame.n[k] * dl[k][j])
            .sum()
    });
    Ok(0.5 * (frame.l[0] * comm[0].conj() + frame.l[1] * comm[1].conj()))
}

/// Σ_jk ∂²δ/∂z_j∂z̄_k u_j ū_k for standard coefficients u on the ball.
pub fn levi_hess(z: PointC2, u: [C64; 2]) -> C64 {
    let r = z.norm();
    let zz = [z.z1, z.z2];
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..2 {
        for k in 0..2 {
            let delta = if j == k { 1.0 / (2.0 * r) } else { 0.0 };
            let h = delta - zz[j].conj() * zz[k] / (4.0 * r * r * r);
            acc += h * u[j] * u[k].conj();
        }
    }
    acc
}

/// Two frame components per boundary node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryField {
    pub values: Vec<[C64; 2]>,
}

impl BoundaryField {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![[C64::new(0.0, 0.0); 2]; n],
        }
    }

    pub fn from_fn<F: Fn(usize) -> [C64; 2]>(n: usize, f: F) -> Self {
        Self {
            values: (0..n).map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn component(&self, k: usize) -> Vec<C64> {
        self.values.iter().map(|v| v[k]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }

    /// Quadrature L² norm of one component.
    pub fn l2(&self, grid: &BoundaryGrid, k: usize) -> f64 {
        self.values
            .iter()
            .zip(&grid.weights)
            .map(|(v, w)| w * v[k].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// γu: frame coefficients at the grid nodes.
pub fn trace_gamma(u: &Form01, grid: &BoundaryGrid) -> Result<BoundaryField> {
    let values = grid
        .nodes
        .iter()
        .map(|&z| u.eval_in(Basis::Frame, z))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryField { values })
}

/// Bu at the grid nodes.
pub fn conormal_on_grid(u: &Form01, grid: &BoundaryGrid) -> Result<BoundaryField> {
    let values = grid
        .nodes
        .iter()
        .map(|&z| conormal_b_std(u, z))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryField { values })
}
