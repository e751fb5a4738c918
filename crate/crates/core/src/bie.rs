//! Boundary operators S, T, T*, R on S³, the reduced boundary system and its solution.
//!
//! Densities are frame coefficients. With SL and DL as in [`crate::potentials`],
//! S = γSL, T = 2γDL + id, T* = 2B SL − id and R = −B DL.

use std::fmt;
use std::time::Instant;

use faer::prelude::*;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::forms::BoundaryField;
use crate::geometry::{bracket, BoundaryGrid, Geometry, GridSpec, Slot, Ball};
use crate::potentials::{coords, dl_kernel, layer_jet_analytic, newton_jet, newton_trace, LayerQuadrature, LayerRole, VolumeData};
use crate::forms::conormal_b_from_std_jets;
use crate::quadrature::{chord_to_angle, polar_rule, AlphaPanels, PointRule, S2Rule, VolumeRuleSpec};
use crate::{Error, PointC2, Result, C64, PI};

const ZERO: C64 = C64::new(0.0, 0.0);

/// A 2×2 kernel value acting on frame coefficients.
pub type KernelMatrix = [[C64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelName {
    S,
    T,
    Tstar,
    R,
}

impl KernelName {
    pub const ALL: [KernelName; 4] = [KernelName::S, KernelName::T, KernelName::Tstar, KernelName::R];

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "S" => Ok(Self::S),
            "T" => Ok(Self::T),
            "Tstar" | "T*" => Ok(Self::Tstar),
            "R" => Ok(Self::R),
            _ => Err(Error::Unknown {
                kind: "kernel",
                name: name.to_string(),
                expected: "S, T, Tstar, R".into(),
            }),
        }
    }
}

impl fmt::Display for KernelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::S => "S",
            Self::T => "T",
            Self::Tstar => "Tstar",
            Self::R => "R",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMode {
    /// Pairing brackets built from ∂δ of a geometry.
    Generic,
    /// Closed forms on the unit sphere.
    Ball,
}

fn sub(a: PointC2, b: PointC2) -> [C64; 2] {
    (a - b).as_array()
}

/// Kernel from pairing brackets of an arbitrary geometry.
pub fn kernel_generic(geom: &dyn Geometry, name: KernelName, z: PointC2, w: PointC2) -> Result<KernelMatrix> {
    use Slot::*;
    let d2 = z.dist_sqr(w);
    if d2 == 0.0 {
        return Err(Error::Coincident);
    }
    let b = |a: Slot, c: Slot| bracket(geom, a, c);
    let d4 = d2 * d2;
    Ok(match name {
        KernelName::S => {
            let s = 1.0 / (2.0 * PI * PI * d2);
            [
                [b(L(w), L(z))? * s, b(N(w), L(z))? * s],
                [b(L(w), N(z))? * s, b(N(w), N(z))? * s],
            ]
        }
        KernelName::T => {
            let s = -1.0 / (PI * PI * d4);
            let wz = Disp(sub(w, z));
            [
                [b(N(z), wz)? * s, b(wz, L(z))? * s],
                [-b(L(z), wz)? * s, b(wz, N(z))? * s],
            ]
        }
        KernelName::Tstar => {
            let s = -1.0 / (PI * PI * d4);
            let zw = Disp(sub(z, w));
            [
                [b(zw, N(w))? * s, -b(zw, L(w))? * s],
                [b(L(w), zw)? * s, b(N(w), zw)? * s],
            ]
        }
        KernelName::R => {
            // printed finite-part kernel; 2(N,N) and 2(L,L) carry the frame normalization
            let s = 4.0 / (PI * PI * d4);
            [
                [b(N(z), N(z))? * (2.0 * s), ZERO],
                [ZERO, b(L(z), L(z))? * (2.0 * s)],
            ]
        }
    })
}

/// Closed forms on S³.
pub fn kernel_ball(name: KernelName, z: PointC2, w: PointC2) -> Result<KernelMatrix> {
    let d2 = z.dist_sqr(w);
    if d2 == 0.0 {
        return Err(Error::Coincident);
    }
    let (z1, z2, w1, w2) = (z.z1, z.z2, w.z1, w.z2);
    let one = C64::new(1.0, 0.0);
    Ok(match name {
        KernelName::S => {
            let s = 1.0 / (4.0 * PI * PI * d2);
            [
                [(w2.conj() * z2 + w1.conj() * z1) * s, (w1 * z2 - w2 * z1) * s],
                [
                    (w2.conj() * z1.conj() - w1.conj() * z2.conj()) * s,
                    (w1 * z1.conj() + w2 * z2.conj()) * s,
                ],
            ]
        }
        KernelName::T => {
            let s = -1.0 / (PI * PI * d2 * d2);
            [
                [(z1 * w1.conj() + z2 * w2.conj() - one) * s, (z2 * w1 - z1 * w2) * s],
                [
                    (z1.conj() * w2.conj() - z2.conj() * w1.conj()) * s,
                    (z1.conj() * w1 + z2.conj() * w2 - one) * s,
                ],
            ]
        }
        KernelName::Tstar => {
            let s = -1.0 / (PI * PI * d2 * d2);
            [
                [(w1.conj() * z1 + w2.conj() * z2 - one) * s, (w1 * z2 - w2 * z1) * s],
                [
                    (w2.conj() * z1.conj() - w1.conj() * z2.conj()) * s,
                    (w1 * z1.conj() + w2 * z2.conj() - one) * s,
                ],
            ]
        }
        KernelName::R => {
            let s = C64::new(4.0 / (PI * PI * d2 * d2), 0.0);
            [[s, ZERO], [ZERO, s]]
        }
    })
}

pub fn kernel_eval(name: KernelName, z: PointC2, w: PointC2, mode: KernelMode) -> Result<KernelMatrix> {
    match mode {
        KernelMode::Generic => kernel_generic(&Ball, name, z, w),
        KernelMode::Ball => kernel_ball(name, z, w),
    }
}

/// −B_z applied to the double-layer kernel, for z on S³. This is the kernel of R
/// obtained by differentiating DL directly.
pub fn r_kernel_from_double_layer(z: PointC2, w: PointC2) -> Result<KernelMatrix> {
    let k = dl_kernel(&coords(z), w)?;
    let mut out = [[ZERO; 2]; 2];
    for j in 0..2 {
        let b = conormal_b_from_std_jets(&k[0][j].d, &k[1][j].d);
        out[0][j] = -b[0];
        out[1][j] = -b[1];
    }
    Ok(out)
}

fn mat_vec(k: &KernelMatrix, v: [C64; 2]) -> [C64; 2] {
    [k[0][0] * v[0] + k[0][1] * v[1], k[1][0] * v[0] + k[1][1] * v[1]]
}

/// Geometric ε-sequence for the exclusion integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsSpec {
    /// Largest chord radius.
    pub eps0: f64,
    pub ratio: f64,
    pub levels: usize,
    pub n_near: usize,
    pub n_far: usize,
    pub s2_theta: usize,
    pub s2_az: usize,
}

impl Default for EpsSpec {
    fn default() -> Self {
        Self {
            eps0: 0.2,
            ratio: 2.0,
            levels: 6,
            n_near: 10,
            n_far: 24,
            s2_theta: 10,
            s2_az: 20,
        }
    }
}

impl EpsSpec {
    pub fn epsilons(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.eps0 / self.ratio.powi(k as i32)).collect()
    }

    fn rule(&self, z: PointC2, eps: f64) -> PointRule {
        let a = chord_to_angle(eps);
        polar_rule(
            z,
            &AlphaPanels::graded(a, 0.25, self.n_near, self.n_far),
            &S2Rule::new(self.s2_theta, self.s2_az),
        )
    }

    /// Weights c_k with Σ c_k I(ε_k) = finite part, from a least-squares fit of
    /// I(ε) = B/ε + A + c₁ε + c₂ε² + c₃ε³.
    fn finite_part_weights(&self) -> Result<Vec<f64>> {
        let eps = self.epsilons();
        if eps.len() < 5 {
            return Err(Error::Config("finite part needs at least 5 eps levels".into()));
        }
        let basis = |e: f64| [1.0 / e, 1.0, e, e * e, e * e * e];
        let a = Mat::<f64>::from_fn(eps.len(), 5, |i, j| basis(eps[i])[j]);
        // row of the pseudo-inverse selecting A
        let ata = a.transpose() * &a;
        let e1 = Mat::<f64>::from_fn(5, 1, |i, _| if i == 1 { 1.0 } else { 0.0 });
        let y = ata.full_piv_lu().solve(&e1);
        let c = &a * &y;
        Ok((0..eps.len()).map(|i| c[(i, 0)]).collect())
    }
}

/// Result of an ε-regularized application.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Applied {
    pub value: [C64; 2],
    /// Values I(ε_k) in sequence order.
    pub sequence: Vec<[C64; 2]>,
    /// Fitted convergence (T, T*) or divergence (R) exponents between levels.
    pub exponents: Vec<f64>,
}

fn integrate_rule<F: Fn(PointC2) -> [C64; 2]>(
    name: KernelName,
    z: PointC2,
    rule: &PointRule,
    density: &F,
) -> Result<[C64; 2]> {
    let mut acc = [ZERO; 2];
    for (&w, &wt) in rule.points.iter().zip(&rule.weights) {
        let v = mat_vec(&kernel_ball(name, z, w)?, density(w));
        acc[0] += v[0] * wt;
        acc[1] += v[1] * wt;
    }
    Ok(acc)
}

fn exponents(seq: &[[C64; 2]], ratio: f64) -> Vec<f64> {
    let diff = |a: [C64; 2], b: [C64; 2]| ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt();
    seq.windows(3)
        .map(|w| (diff(w[0], w[1]) / diff(w[1], w[2])).ln() / ratio.ln())
        .collect()
}

/// Applies an operator to an analytic frame density at a boundary point.
///
/// S is integrated directly by the polar rule. T and T* use ε-exclusion with
/// Richardson extrapolation at the fitted order; R takes the finite part of the
/// ε-sequence.
pub fn apply_analytic<F: Fn(PointC2) -> [C64; 2]>(
    name: KernelName,
    density: F,
    z: PointC2,
    eps: &EpsSpec,
    nystrom: &NystromSpec,
) -> Result<Applied> {
    if name == KernelName::S {
        let value = integrate_rule(name, z, &nystrom.rule(z), &density)?;
        return Ok(Applied {
            value,
            sequence: Vec::new(),
            exponents: Vec::new(),
        });
    }
    let seq = eps
        .epsilons()
        .into_iter()
        .map(|e| integrate_rule(name, z, &eps.rule(z, e), &density))
        .collect::<Result<Vec<_>>>()?;
    let exps = exponents(&seq, eps.ratio);
    let finite = |v: &f64| v.is_finite();
    match name {
        KernelName::R => {
            let c = eps.finite_part_weights()?;
            let mut value = [ZERO; 2];
            for (ck, v) in c.iter().zip(&seq) {
                value[0] += v[0] * *ck;
                value[1] += v[1] * *ck;
            }
            // for a 1/ε divergence successive differences double: exponent −1
            Ok(Applied {
                value,
                sequence: seq,
                exponents: exps,
            })
        }
        _ => {
            let n = seq.len();
            let p = exps.last().copied().filter(finite);
            let value = match p {
                None => seq[n - 1],
                Some(p) if p > 0.2 => {
                    let f = 1.0 / (eps.ratio.powf(p) - 1.0);
                    let (a, b) = (seq[n - 1], seq[n - 2]);
                    [a[0] + (a[0] - b[0]) * f, a[1] + (a[1] - b[1]) * f]
                }
                Some(_) => return Err(Error::Extrapolation { exponents: exps }),
            };
            Ok(Applied {
                value,
                sequence: seq,
                exponents: exps,
            })
        }
    }
}

/// Applies an operator to a grid density (interpolated spectrally) at a boundary point.
pub fn apply_operator(
    name: KernelName,
    density: &BoundaryField,
    grid: &BoundaryGrid,
    z: PointC2,
    eps: &EpsSpec,
    nystrom: &NystromSpec,
) -> Result<Applied> {
    if density.len() != grid.len() {
        return Err(Error::Config("density and grid sizes differ".into()));
    }
    if density.values.iter().all(|v| v[0] == ZERO && v[1] == ZERO) {
        return Ok(Applied {
            value: [ZERO; 2],
            sequence: Vec::new(),
            exponents: Vec::new(),
        });
    }
    apply_analytic(name, |w| grid.interpolate(&density.values, w), z, eps, nystrom)
}

/// Target-centered polar rule used for Nyström rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NystromSpec {
    pub n_alpha: usize,
    pub s2_theta: usize,
    pub s2_az: usize,
}

impl Default for NystromSpec {
    fn default() -> Self {
        Self {
            n_alpha: 24,
            s2_theta: 8,
            s2_az: 16,
        }
    }
}

impl NystromSpec {
    fn rule(&self, z: PointC2) -> PointRule {
        polar_rule(z, &AlphaPanels::full(self.n_alpha), &S2Rule::new(self.s2_theta, self.s2_az))
    }
}

/// Which R enters the reduced system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RSource {
    /// R = −B DL, which vanishes identically on the sphere.
    Derived,
    /// The printed hypersingular kernel, by finite part.
    Printed,
}

/// Nyström rows for one target: one 2×2 block per grid node and operator.
type Rows = Vec<Vec<KernelMatrix>>;

fn accumulate(grid: &BoundaryGrid, rows: &mut [KernelMatrix], w: PointC2, k: &KernelMatrix, scale: f64) {
    let st = grid.stencil(w);
    let n_phi = grid.spec.n_phi;
    for (a, &ca) in st.chi.iter().enumerate() {
        for (j1, &c1) in st.phi1.iter().enumerate() {
            let c = ca * c1 * scale;
            let base = (a * n_phi + j1) * n_phi;
            for (j2, &c2) in st.phi2.iter().enumerate() {
                let cc = c * c2;
                let r = &mut rows[base + j2];
                for i in 0..2 {
                    for j in 0..2 {
                        r[i][j] += k[i][j] * cc;
                    }
                }
            }
        }
    }
}

fn rows_for_rule(grid: &BoundaryGrid, ops: &[KernelName], z: PointC2, rule: &PointRule, scale: f64, out: &mut Rows) -> Result<()> {
    for (&w, &wt) in rule.points.iter().zip(&rule.weights) {
        for (o, &name) in ops.iter().enumerate() {
            let k = kernel_ball(name, z, w)?;
            accumulate(grid, &mut out[o], w, &k, wt * scale);
        }
    }
    Ok(())
}

/// Rows at an arbitrary boundary target for the requested operators.
pub fn target_rows(grid: &BoundaryGrid, ops: &[KernelName], z: PointC2, nystrom: &NystromSpec, eps: &EpsSpec) -> Result<Rows> {
    let mut out: Rows = vec![vec![[[ZERO; 2]; 2]; grid.len()]; ops.len()];
    let plain: Vec<KernelName> = ops.iter().copied().filter(|&n| n != KernelName::R).collect();
    let mut plain_rows: Rows = vec![vec![[[ZERO; 2]; 2]; grid.len()]; plain.len()];
    rows_for_rule(grid, &plain, z, &nystrom.rule(z), 1.0, &mut plain_rows)?;
    let mut it = plain_rows.into_iter();
    for (o, &name) in ops.iter().enumerate() {
        if name == KernelName::R {
            let c = eps.finite_part_weights()?;
            let mut r: Rows = vec![std::mem::take(&mut out[o])];
            for (e, ck) in eps.epsilons().into_iter().zip(c) {
                rows_for_rule(grid, &[KernelName::R], z, &eps.rule(z, e), ck, &mut r)?;
            }
            out[o] = r.pop().unwrap_or_default();
        } else {
            out[o] = it.next().unwrap_or_default();
        }
    }
    Ok(out)
}

/// Rows for the representative nodes (one per polar level, at φ₁ = φ₂ = 0).
fn representative_rows(grid: &BoundaryGrid, ops: &[KernelName], nystrom: &NystromSpec, eps: &EpsSpec) -> Result<Vec<Rows>> {
    (0..grid.spec.n_chi)
        .map(|a| target_rows(grid, ops, grid.nodes[grid.index(a, 0, 0)], nystrom, eps))
        .collect()
}

/// Phase e^{i(α+β)} of the torus shift (s₁, s₂) grid steps.
fn shift_phase(grid: &BoundaryGrid, s1: usize, s2: usize) -> C64 {
    let h = 2.0 * PI / grid.spec.n_phi as f64;
    C64::from_polar(1.0, (s1 + s2) as f64 * h)
}

/// K ↦ P K P† with P = diag(e, 1).
fn conjugate_by_phase(k: &KernelMatrix, e: C64) -> KernelMatrix {
    [[k[0][0], k[0][1] * e], [k[1][0] * e.conj(), k[1][1]]]
}

/// A dense operator on frame densities, one 2×2 block per node pair.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub name: KernelName,
    pub n: usize,
    /// Row-major blocks, index i·n + k.
    pub blocks: Vec<KernelMatrix>,
}

impl OperatorMatrix {
    pub fn block(&self, i: usize, k: usize) -> &KernelMatrix {
        &self.blocks[i * self.n + k]
    }

    pub fn apply(&self, density: &BoundaryField) -> BoundaryField {
        BoundaryField::from_fn(self.n, |i| {
            let mut acc = [ZERO; 2];
            for k in 0..self.n {
                let v = mat_vec(self.block(i, k), density.values[k]);
                acc[0] += v[0];
                acc[1] += v[1];
            }
            acc
        })
    }
}

/// Maps node (a, j1, j2) under the torus shift.
fn shifted(grid: &BoundaryGrid, k: usize, s1: usize, s2: usize) -> usize {
    let n = grid.spec.n_phi;
    let a = k / (n * n);
    let j1 = (k / n) % n;
    let j2 = k % n;
    grid.index(a, (j1 + s1) % n, (j2 + s2) % n)
}

/// Calls `f(target, source, block)` for every node pair, generating rows of
/// non-representative targets from the torus covariance K(Uz,Uw) = P K(z,w) P†.
fn expand_rows<F: FnMut(usize, usize, usize, &KernelMatrix)>(grid: &BoundaryGrid, reps: &[Rows], mut f: F) {
    let n_phi = grid.spec.n_phi;
    for (a, rows) in reps.iter().enumerate() {
        for s1 in 0..n_phi {
            for s2 in 0..n_phi {
                let target = grid.index(a, s1, s2);
                let e = shift_phase(grid, s1, s2);
                for (o, row) in rows.iter().enumerate() {
                    for (k, blk) in row.iter().enumerate() {
                        f(o, target, shifted(grid, k, s1, s2), &conjugate_by_phase(blk, e));
                    }
                }
            }
        }
    }
}

/// Dense Nyström matrices of the requested operators.
pub fn assemble_operators(grid: &BoundaryGrid, ops: &[KernelName], nystrom: &NystromSpec, eps: &EpsSpec) -> Result<Vec<OperatorMatrix>> {
    let reps = representative_rows(grid, ops, nystrom, eps)?;
    let n = grid.len();
    let mut mats: Vec<OperatorMatrix> = ops
        .iter()
        .map(|&name| OperatorMatrix {
            name,
            n,
            blocks: vec![[[ZERO; 2]; 2]; n * n],
        })
        .collect();
    expand_rows(grid, &reps, |o, i, k, b| mats[o].blocks[i * n + k] = *b);
    Ok(mats)
}

/// Same matrices, every row built from its own polar rule. For cross-checks.
pub fn assemble_operators_direct(grid: &BoundaryGrid, ops: &[KernelName], nystrom: &NystromSpec, eps: &EpsSpec) -> Result<Vec<OperatorMatrix>> {
    let n = grid.len();
    let mut mats: Vec<OperatorMatrix> = ops
        .iter()
        .map(|&name| OperatorMatrix {
            name,
            n,
            blocks: Vec::with_capacity(n * n),
        })
        .collect();
    for &z in &grid.nodes {
        let rows = target_rows(grid, ops, z, nystrom, eps)?;
        for (m, r) in mats.iter_mut().zip(rows) {
            m.blocks.extend(r);
        }
    }
    Ok(mats)
}

/// Solver settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub nystrom: NystromSpec,
    pub eps: EpsSpec,
    pub volume: VolumeRuleSpec,
    pub r_source: RSource,
    /// Condition estimate above which a ridge term is added.
    pub ridge_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nystrom: NystromSpec::default(),
            eps: EpsSpec::default(),
            volume: VolumeRuleSpec {
                n_theta: 12,
                s2_theta: 8,
                s2_az: 16,
                n_rho: 10,
            },
            r_source: RSource::Derived,
            ridge_threshold: 1e12,
        }
    }
}

/// Equation and component of a row block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowBlock {
    /// 1: trace equation, 2: conormal equation.
    pub equation: u8,
    /// Frame component 1 or 2.
    pub component: u8,
    /// Whether the reduced formulation keeps this block.
    pub kept: bool,
}

pub const ROW_BLOCKS: [RowBlock; 4] = [
    RowBlock { equation: 1, component: 1, kept: true },
    RowBlock { equation: 1, component: 2, kept: false },
    RowBlock { equation: 2, component: 1, kept: false },
    RowBlock { equation: 2, component: 2, kept: true },
];

/// Boundary values of the Newton potential at every node.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NewtonTraces {
    pub gamma: BoundaryField,
    pub conormal: BoundaryField,
}

pub fn newton_traces(f: &VolumeData, grid: &BoundaryGrid, spec: &VolumeRuleSpec) -> Result<NewtonTraces> {
    let n = grid.len();
    if f.is_zero() {
        return Ok(NewtonTraces {
            gamma: BoundaryField::zeros(n),
            conormal: BoundaryField::zeros(n),
        });
    }
    let mut gamma = Vec::with_capacity(n);
    let mut conormal = Vec::with_capacity(n);
    for &z in &grid.nodes {
        let (g, b) = newton_trace(f, z, spec)?;
        gamma.push(g);
        conormal.push(b);
    }
    Ok(NewtonTraces {
        gamma: BoundaryField { values: gamma },
        conormal: BoundaryField { values: conormal },
    })
}

/// The overdetermined reduced system over unknowns (ψ₁, φ₂).
///
/// Row block b, node i is row b·n + i; column k is ψ₁ at node k, column n + k is φ₂.
#[derive(Clone, Debug)]
pub struct BieSystem {
    pub n: usize,
    pub matrix: Mat<C64>,
    pub rhs: Vec<C64>,
    /// √(quadrature weight) of each row's node.
    pub row_weights: Vec<f64>,
    pub blocks: [RowBlock; 4],
    pub traces: NewtonTraces,
    pub r_source: RSource,
    pub timings: Timings,
}

impl BieSystem {
    pub fn row_info(&self, row: usize) -> (RowBlock, usize) {
        (self.blocks[row / self.n], row % self.n)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub assembly_s: f64,
    pub traces_s: f64,
    pub solve_s: f64,
}

fn reduced_ops(r: RSource) -> Vec<KernelName> {
    match r {
        RSource::Derived => vec![KernelName::S, KernelName::T, KernelName::Tstar],
        RSource::Printed => vec![KernelName::S, KernelName::T, KernelName::Tstar, KernelName::R],
    }
}

/// Coefficients of the four row blocks in the unknowns, given operator blocks
/// (S, T, T*, R) between a target and a source node.
///
/// Block 1: ½ψ₁ + ½T₁₁ψ₁ − S₁₂φ₂ = (γGf)₁, block 2: ½T₂₁ψ₁ − S₂₂φ₂ = (γGf)₂,
/// block 3: −R₁₁ψ₁ − ½T*₁₂φ₂ = (BGf)₁, block 4: −R₂₁ψ₁ + ½φ₂ − ½T*₂₂φ₂ = (BGf)₂;
/// identity terms are added separately.
fn block_coefficients(s: &KernelMatrix, t: &KernelMatrix, ts: &KernelMatrix, r: Option<&KernelMatrix>) -> [[C64; 2]; 4] {
    let r = r.copied().unwrap_or([[ZERO; 2]; 2]);
    [
        [0.5 * t[0][0], -s[0][1]],
        [0.5 * t[1][0], -s[1][1]],
        [-r[0][0], -0.5 * ts[0][1]],
        [-r[1][0], -0.5 * ts[1][1]],
    ]
}

/// Assembles the four-block least-squares system for datum f.
pub fn assemble_reduced_system(f: &VolumeData, grid: &BoundaryGrid, cfg: &SolverConfig) -> Result<BieSystem> {
    let n = grid.len();
    let t0 = Instant::now();
    let ops = reduced_ops(cfg.r_source);
    let reps = representative_rows(grid, &ops, &cfg.nystrom, &cfg.eps)?;
    let mut matrix = Mat::<C64>::zeros(4 * n, 2 * n);
    expand_rows(grid, &reps, |o, i, k, b| {
        let (col, blocks): (usize, [(usize, C64); 2]) = match ops[o] {
            KernelName::S => (n + k, [(0, -b[0][1]), (1, -b[1][1])]),
            KernelName::T => (k, [(0, 0.5 * b[0][0]), (1, 0.5 * b[1][0])]),
            KernelName::Tstar => (n + k, [(2, -0.5 * b[0][1]), (3, -0.5 * b[1][1])]),
            KernelName::R => (k, [(2, -b[0][0]), (3, -b[1][0])]),
        };
        for (blk, v) in blocks {
            matrix[(blk * n + i, col)] += v;
        }
    });
    for i in 0..n {
        matrix[(i, i)] += C64::new(0.5, 0.0);
        matrix[(3 * n + i, n + i)] += C64::new(0.5, 0.0);
    }
    let assembly_s = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let traces = newton_traces(f, grid, &cfg.volume)?;
    let traces_s = t1.elapsed().as_secs_f64();
    let mut rhs = vec![ZERO; 4 * n];
    for i in 0..n {
        rhs[i] = traces.gamma.values[i][0];
        rhs[n + i] = traces.gamma.values[i][1];
        rhs[2 * n + i] = traces.conormal.values[i][0];
        rhs[3 * n + i] = traces.conormal.values[i][1];
    }
    let row_weights = (0..4 * n).map(|r| grid.weights[r % n].sqrt()).collect();
    Ok(BieSystem {
        n,
        matrix,
        rhs,
        row_weights,
        blocks: ROW_BLOCKS,
        traces,
        r_source: cfg.r_source,
        timings: Timings {
            assembly_s,
            traces_s,
            solve_s: 0.0,
        },
    })
}

/// Weighted residual norms of each row block for a candidate solution.
pub fn block_residuals(sys: &BieSystem, x: &[C64]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (r, o) in (0..4 * sys.n).map(|r| (r, r / sys.n)) {
        let mut acc = -sys.rhs[r];
        for (c, xc) in x.iter().enumerate() {
            acc += sys.matrix[(r, c)] * xc;
        }
        out[o] += sys.row_weights[r].powi(2) * acc.norm_sqr();
    }
    out.map(f64::sqrt)
}

fn weighted_rhs_norm(sys: &BieSystem) -> f64 {
    sys.rhs
        .iter()
        .zip(&sys.row_weights)
        .map(|(b, w)| w * w * b.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Result of the reduced solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub resolution: GridSpec,
    pub n_nodes: usize,
    pub psi1: Vec<C64>,
    pub phi2: Vec<C64>,
    /// Weighted L² residual of each row block.
    pub block_residuals: [f64; 4],
    /// Residual of the two blocks the reduced formulation drops.
    pub dropped_residual: f64,
    /// Total residual over the weighted right-hand side norm (0 when the data vanish).
    pub relative_residual: f64,
    /// max|R_ii| / min|R_ii| of the QR factor.
    pub condition_estimate: f64,
    pub ridge: Option<f64>,
    pub r_source: RSource,
    pub timings: Timings,
}

/// Least squares by Householder QR on the row-weighted system; a ridge term on the
/// normal equations is used only above the condition threshold.
pub fn solve_bie(sys: &BieSystem, grid: &BoundaryGrid, cfg: &SolverConfig) -> Result<SolveReport> {
    let t0 = Instant::now();
    let (m, n2) = (4 * sys.n, 2 * sys.n);
    let a = Mat::<C64>::from_fn(m, n2, |r, c| sys.matrix[(r, c)] * sys.row_weights[r]);
    let b = Mat::<C64>::from_fn(m, 1, |r, _| sys.rhs[r] * sys.row_weights[r]);
    let qr = a.qr();
    let rf = qr.thin_R();
    let diag: Vec<f64> = (0..n2).map(|i| rf[(i, i)].norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(dmax > 0.0) || !dmax.is_finite() {
        return Err(Error::Solver("zero or non-finite system matrix".into()));
    }
    let cond = dmax / dmin;
    let mut ridge = None;
    let x: Vec<C64> = if cond > cfg.ridge_threshold {
        let lambda = 1e-12 * dmax * dmax;
        let mut ata = a.adjoint() * &a;
        for i in 0..n2 {
            ata[(i, i)] += C64::new(lambda, 0.0);
        }
        let atb = a.adjoint() * &b;
        let sol = ata.full_piv_lu().solve(&atb);
        ridge = Some(lambda);
        (0..n2).map(|i| sol[(i, 0)]).collect()
    } else {
        let sol = qr.solve_lstsq(&b);
        (0..n2).map(|i| sol[(i, 0)]).collect()
    };
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Solver(format!("non-finite solution (condition estimate {cond:.3e})")));
    }
    let res = block_residuals(sys, &x);
    let total = res.iter().map(|r| r * r).sum::<f64>().sqrt();
    let bnorm = weighted_rhs_norm(sys);
    let mut timings = sys.timings;
    timings.solve_s = t0.elapsed().as_secs_f64();
    Ok(SolveReport {
        resolution: grid.spec,
        n_nodes: sys.n,
        psi1: x[..sys.n].to_vec(),
        phi2: x[sys.n..].to_vec(),
        block_residuals: res,
        dropped_residual: (res[1] * res[1] + res[2] * res[2]).sqrt(),
        relative_residual: if bnorm > 0.0 { total / bnorm } else { 0.0 },
        condition_estimate: cond,
        ridge,
        r_source: sys.r_source,
        timings,
    })
}

/// Densities (ψ, φ) of a solve as full frame fields: ψ = (ψ₁, 0), φ = (0, φ₂).
pub fn solved_densities(report: &SolveReport) -> (BoundaryField, BoundaryField) {
    let n = report.n_nodes;
    (
        BoundaryField::from_fn(n, |i| [report.psi1[i], ZERO]),
        BoundaryField::from_fn(n, |i| [ZERO, report.phi2[i]]),
    )
}

/// Constant-velocity fit: ψ₁ ≡ b, φ₂ ≡ a.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantVelocity {
    pub a: C64,
    pub b: C64,
    /// Per-node residual of each row block (unweighted moduli).
    pub profile: [Vec<f64>; 4],
    pub block_residuals: [f64; 4],
}

/// Result of the free and the b = 0 constant-velocity fits.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantVelocityReport {
    pub free: ConstantVelocity,
    pub pinned: ConstantVelocity,
    pub pole_index: usize,
    /// First-equation residual modulus at the node (1, 0), free and pinned.
    pub pole_residual_free: f64,
    pub pole_residual_pinned: f64,
}

/// Operator columns applied to constant densities at every node: the images of
/// ψ = (1, 0) and φ = (0, 1) in the four row blocks.
fn constant_columns(grid: &BoundaryGrid, cfg: &SolverConfig) -> Result<[Vec<[C64; 4]>; 2]> {
    let n = grid.len();
    let mut col_b = vec![[ZERO; 4]; n];
    let mut col_a = vec![[ZERO; 4]; n];
    let n_phi = grid.spec.n_phi;
    for a in 0..grid.spec.n_chi {
        let z = grid.nodes[grid.index(a, 0, 0)];
        let rule = cfg.nystrom.rule(z);
        let mut m: [KernelMatrix; 4] = [[[ZERO; 2]; 2]; 4];
        for (o, name) in [KernelName::S, KernelName::T, KernelName::Tstar].into_iter().enumerate() {
            for (&w, &wt) in rule.points.iter().zip(&rule.weights) {
                let k = kernel_ball(name, z, w)?;
                for i in 0..2 {
                    for j in 0..2 {
                        m[o][i][j] += k[i][j] * wt;
                    }
                }
            }
        }
        if cfg.r_source == RSource::Printed {
            let c = eps_constant_r(z, &cfg.eps)?;
            m[3] = [[c, ZERO], [ZERO, c]];
        }
        for s1 in 0..n_phi {
            for s2 in 0..n_phi {
                let e = shift_phase(grid, s1, s2);
                let mm: Vec<KernelMatrix> = m.iter().map(|k| conjugate_by_phase(k, e)).collect();
                let c = block_coefficients(&mm[0], &mm[1], &mm[2], Some(&mm[3]));
                let i = grid.index(a, s1, s2);
                for blk in 0..4 {
                    col_b[i][blk] = c[blk][0];
                    col_a[i][blk] = c[blk][1];
                }
                col_b[i][0] += C64::new(0.5, 0.0);
                col_a[i][3] += C64::new(0.5, 0.0);
            }
        }
    }
    Ok([col_b, col_a])
}

fn eps_constant_r(z: PointC2, eps: &EpsSpec) -> Result<C64> {
    let v = apply_analytic(
        KernelName::R,
        |_| [C64::new(1.0, 0.0), ZERO],
        z,
        eps,
        &NystromSpec::default(),
    )?;
    Ok(v.value[0])
}

/// Fits constant densities ψ₁ ≡ b, φ₂ ≡ a to the reduced system, once freely and
/// once with b = 0.
pub fn solve_constant_velocity(f: &VolumeData, grid: &BoundaryGrid, cfg: &SolverConfig) -> Result<ConstantVelocityReport> {
    let n = grid.len();
    let traces = newton_traces(f, grid, &cfg.volume)?;
    let [col_b, col_a] = constant_columns(grid, cfg)?;
    let rhs: Vec<[C64; 4]> = (0..n)
        .map(|i| {
            let g = traces.gamma.values[i];
            let b = traces.conormal.values[i];
            [g[0], g[1], b[0], b[1]]
        })
        .collect();
    let w: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
    let fit = |pinned: bool| -> ConstantVelocity {
        let cols: Vec<&Vec<[C64; 4]>> = if pinned { vec![&col_a] } else { vec![&col_b, &col_a] };
        let a = Mat::<C64>::from_fn(4 * n, cols.len(), |r, c| cols[c][r % n][r / n] * w[r % n]);
        let rb = Mat::<C64>::from_fn(4 * n, 1, |r, _| rhs[r % n][r / n] * w[r % n]);
        let sol = a.qr().solve_lstsq(&rb);
        let (bv, av) = if pinned { (ZERO, sol[(0, 0)]) } else { (sol[(0, 0)], sol[(1, 0)]) };
        let mut profile: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; n]);
        let mut sums = [0.0; 4];
        for i in 0..n {
            for blk in 0..4 {
                let r = col_b[i][blk] * bv + col_a[i][blk] * av - rhs[i][blk];
                profile[blk][i] = r.norm();
                sums[blk] += grid.weights[i] * r.norm_sqr();
            }
        }
        ConstantVelocity {
            a: av,
            b: bv,
            profile,
            block_residuals: sums.map(f64::sqrt),
        }
    };
    let free = fit(false);
    let pinned = fit(true);
    let p = grid.pole_index();
    Ok(ConstantVelocityReport {
        pole_residual_free: free.profile[0][p],
        pole_residual_pinned: pinned.profile[0][p],
        free,
        pinned,
        pole_index: p,
    })
}

/// The rigidity quantity t = (Gf, dz̄₂) at (1, 0) from the boundary trace of the
/// Newton potential, with the frame cross-check value (γGf)₁(1, 0) which should be −t.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Rigidity {
    pub t: C64,
    pub s: C64,
    pub frame_first: C64,
}

pub fn rigidity_value(f: &VolumeData, spec: &VolumeRuleSpec) -> Result<Rigidity> {
    let p = PointC2::new(C64::new(1.0, 0.0), ZERO);
    let jet = newton_jet(f, p, spec)?;
    let fr = jet.frame_value(p);
    Ok(Rigidity {
        t: jet.value[1],
        s: jet.value[0],
        frame_first: fr[0],
    })
}

/// Radial limits of layer potentials against the boundary operators at one node.
///
/// Entries are |SL φ − Sφ|, |DL ψ − ½(T − id)ψ|, |B SL φ − ½(T* + id)φ| and
/// |−B DL ψ − Rψ| with R the derived (vanishing) operator, all in the frame basis
/// and evaluated at (1 − h)z.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpReport {
    pub h: Vec<f64>,
    pub errors: [Vec<f64>; 4],
    /// Errors of the limit extrapolated linearly in h from the last two radii.
    pub limit_errors: [f64; 4],
    /// Sizes of the boundary values, for relative errors.
    pub scale: [f64; 4],
    /// Printed-kernel finite part of Rψ at z, for comparison with −B DL.
    pub printed_r: [C64; 2],
}

pub fn jump_relations<F, G>(psi: F, phi: G, z: PointC2, hs: &[f64], cfg: &SolverConfig, layer: &LayerQuadrature) -> Result<JumpReport>
where
    F: Fn(PointC2) -> [C64; 2] + Copy,
    G: Fn(PointC2) -> [C64; 2] + Copy,
{
    let s = apply_analytic(KernelName::S, phi, z, &cfg.eps, &cfg.nystrom)?.value;
    let t = apply_analytic(KernelName::T, psi, z, &cfg.eps, &cfg.nystrom)?.value;
    let ts = apply_analytic(KernelName::Tstar, phi, z, &cfg.eps, &cfg.nystrom)?.value;
    let printed_r = apply_analytic(KernelName::R, psi, z, &cfg.eps, &cfg.nystrom)?.value;
    let (p, f) = (psi(z), phi(z));
    let targets = [
        s,
        [0.5 * (t[0] - p[0]), 0.5 * (t[1] - p[1])],
        [0.5 * (ts[0] + f[0]), 0.5 * (ts[1] + f[1])],
        [ZERO; 2],
    ];
    let norm = |v: [C64; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    if hs.len() < 2 {
        return Err(Error::Config("jump check needs at least two radii".into()));
    }
    let mut errors: [Vec<f64>; 4] = Default::default();
    let mut last: Vec<[[C64; 2]; 4]> = Vec::new();
    for &h in hs {
        let x = z.scale(1.0 - h);
        let sl = layer_jet_analytic(LayerRole::Single, phi, x, layer)?;
        let dl = layer_jet_analytic(LayerRole::Double, psi, x, layer)?;
        let bdl = dl.conormal();
        let got = [
            sl.frame_value(z),
            dl.frame_value(z),
            sl.conormal(),
            [-bdl[0], -bdl[1]],
        ];
        for k in 0..4 {
            errors[k].push(norm([got[k][0] - targets[k][0], got[k][1] - targets[k][1]]));
        }
        last.push(got);
    }
    let n = hs.len();
    let (h1, h0) = (hs[n - 1], hs[n - 2]);
    let limit_errors = std::array::from_fn(|k| {
        let v: [C64; 2] = std::array::from_fn(|j| {
            (last[n - 1][k][j] * h0 - last[n - 2][k][j] * h1) / (h0 - h1) - targets[k][j]
        });
        norm(v)
    });
    Ok(JumpReport {
        h: hs.to_vec(),
        errors,
        limit_errors,
        scale: [norm(targets[0]), norm(targets[1]), norm(targets[2]), norm(p)],
        printed_r,
    })
}
