//! Experiment driver behind the `dbar-bie` binary.
//!
//! Every command returns a [`Report`] of named checks. Checks tied to an acceptance
//! criterion carry its number, and each criterion appears in exactly one command.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bie::{
    apply_analytic, assemble_reduced_system, jump_relations, kernel_eval, rigidity_value, solve_bie,
    solve_constant_velocity, solved_densities, target_rows, KernelMode, KernelName, SolveReport,
    SolverConfig,
};
use crate::catalog::{manufactured_field, random_poly, CatalogEntry};
use crate::expr::Field;
use crate::forms::{
    bracket_ln_n, box_apply_std, conormal_on_grid, dbar_dbar_scalar, dbar_form, dbar_scalar,
    dbar_star_form, dbar_star_top, levi_hess, trace_gamma, Basis, BoundaryField, Form01, TopForm,
};
use crate::geometry::{bracket, pairing, Ball, BoundaryGrid, Geometry, GridSpec, InteriorGrid, Pairing, Slot};
use crate::potentials::{green_reconstruct, LayerDensity, LayerQuadrature, PotentialOptions, VolumeData};
use crate::quadrature::VolumeRuleSpec;
use crate::{Error, PointC2, Result, C64, PI};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyIdentities,
    DumpKernels,
    GreenCheck,
    Solve,
    ConstantVelocity,
    Rigidity,
    KmhCheck,
    ConvergenceStudy,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::VerifyIdentities,
        Command::DumpKernels,
        Command::GreenCheck,
        Command::Solve,
        Command::ConstantVelocity,
        Command::Rigidity,
        Command::KmhCheck,
        Command::ConvergenceStudy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyIdentities => "verify-identities",
            Command::DumpKernels => "dump-kernels",
            Command::GreenCheck => "green-check",
            Command::Solve => "solve",
            Command::ConstantVelocity => "constant-velocity",
            Command::Rigidity => "rigidity",
            Command::KmhCheck => "kmh-check",
            Command::ConvergenceStudy => "convergence-study",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name).ok_or_else(|| Error::Unknown {
            kind: "command",
            name: name.to_string(),
            expected: Self::ALL.map(|c| c.name()).join(", "),
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tolerance profile. `strict` tightens discretization tolerances tenfold; exact
/// identities keep their tolerances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TolProfile {
    Strict,
    #[default]
    Baseline,
}

impl TolProfile {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "strict" => Ok(Self::Strict),
            "baseline" => Ok(Self::Baseline),
            _ => Err(Error::Unknown {
                kind: "tolerance profile",
                name: name.to_string(),
                expected: "strict, baseline".into(),
            }),
        }
    }

    fn scale(self) -> f64 {
        match self {
            Self::Strict => 0.1,
            Self::Baseline => 1.0,
        }
    }
}

/// Parses `7x12` into a grid spec.
pub fn parse_grid(s: &str) -> Result<GridSpec> {
    let bad = || Error::Config(format!("grid `{s}` is not of the form <n_chi>x<n_phi>"));
    let (a, b) = s.split_once('x').ok_or_else(bad)?;
    let spec = GridSpec::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    spec.validate()?;
    Ok(spec)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Boundary grids, strictly increasing; the last one is the baseline.
    pub grids: Vec<GridSpec>,
    pub solver: SolverConfig,
    pub layer: LayerQuadrature,
    /// Interior rule for volume integrals of forms: radial nodes and shell grid.
    pub interior_radial: usize,
    pub interior_shell: GridSpec,
    /// Catalog fields; empty selects each command's default set.
    pub fields: Vec<String>,
    /// Output directory for the JSON report and CSV artifacts.
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub tol_profile: TolProfile,
    /// Random points or pairs per exact identity.
    pub samples: usize,
    /// Quantity for convergence-study: quadrature, green, solve or identities.
    pub study: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grids: vec![GridSpec::new(3, 8), GridSpec::new(5, 10), GridSpec::new(7, 12)],
            solver: SolverConfig::default(),
            layer: LayerQuadrature::default(),
            interior_radial: 10,
            interior_shell: GridSpec::new(11, 20),
            fields: Vec::new(),
            out: None,
            seed: 20240611,
            tol_profile: TolProfile::Baseline,
            samples: 1000,
            study: "green".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| {
            Error::Config(format!(
                "{}: {e}; expected an object with keys grids, solver, layer, interior_radial, interior_shell, fields, out, seed, tol_profile, samples, study",
                path.display()
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.grids.is_empty() {
            return Err(Error::Config("at least one grid is required".into()));
        }
        for g in &self.grids {
            g.validate()?;
        }
        if self.grids.windows(2).any(|w| w[1].len() <= w[0].len()) {
            return Err(Error::Config("grid resolutions must be strictly increasing".into()));
        }
        self.interior_shell.validate()?;
        if self.interior_radial < 2 || self.samples == 0 {
            return Err(Error::Config("interior_radial must be at least 2 and samples positive".into()));
        }
        if self.solver.eps.levels < 5 {
            return Err(Error::Config("eps levels must be at least 5".into()));
        }
        Ok(())
    }

    pub fn baseline(&self) -> GridSpec {
        self.grids[self.grids.len() - 1]
    }

    fn fields_or(&self, default: &[&str]) -> Vec<String> {
        if self.fields.is_empty() {
            default.iter().map(|s| s.to_string()).collect()
        } else {
            self.fields.clone()
        }
    }
}

/// One measured quantity against its tolerance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Part {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Part {
    /// Passes when error ≤ tolerance.
    pub fn at_most(name: impl Into<String>, error: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: error <= tolerance,
            error,
            tolerance,
        }
    }

    /// Passes when value ≥ bound; `error` holds the value.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= bound,
            error: value,
            tolerance: bound,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            passed: ok,
            error: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub criterion: Option<u8>,
    pub passed: bool,
    pub parts: Vec<Part>,
    /// Log-log slope of error against node count, for refinement checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
    pub details: Value,
}

impl Check {
    fn new(name: &str, criterion: Option<u8>, parts: Vec<Part>, details: Value) -> Self {
        Self {
            name: name.to_string(),
            criterion,
            passed: parts.iter().all(|p| p.passed),
            parts,
            order: None,
            details,
        }
    }

    pub fn failed_parts(&self) -> Vec<&Part> {
        self.parts.iter().filter(|p| !p.passed).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: Command,
    pub seed: u64,
    pub tol_profile: TolProfile,
    pub checks: Vec<Check>,
    pub solves: Vec<SolveReport>,
    pub elapsed_s: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn criterion(&self, k: u8) -> Option<&Check> {
        self.checks.iter().find(|c| c.criterion == Some(k))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_sphere(rng: &mut ChaCha8Rng) -> PointC2 {
    loop {
        let p = PointC2::real(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        if p.norm() > 1e-3 {
            return p.normalized();
        }
    }
}

fn random_ball(rng: &mut ChaCha8Rng, r_min: f64, r_max: f64) -> PointC2 {
    let r = rng.gen_range(r_min..r_max);
    random_sphere(rng).scale(r)
}

fn norm2(v: [C64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

fn diff2(a: [C64; 2], b: [C64; 2]) -> f64 {
    norm2([a[0] - b[0], a[1] - b[1]])
}

/// Least-squares slope of log(error) against log(node count).
pub fn loglog_slope(n: &[f64], err: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = n
        .iter()
        .zip(err)
        .filter(|(_, &e)| e > 0.0 && e.is_finite())
        .map(|(&x, &e)| (x.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Each error below the previous one, or both under `floor`.
fn decreasing(err: &[f64], floor: f64) -> bool {
    err.windows(2).all(|w| w[1] < w[0] || (w[0] <= floor && w[1] <= floor))
}

fn catalog(name: &str, seed: u64) -> Result<CatalogEntry> {
    manufactured_field(name, seed)
}

fn exact_solution(e: &CatalogEntry) -> Result<&Form01> {
    e.u.as_ref()
        .ok_or_else(|| Error::Config(format!("field `{}` has no exact solution", e.name)))
}

// ---------------------------------------------------------------- identities

/// Exact identities of the frame and pairings on random points.
pub fn identities_check(cfg: &ExperimentConfig) -> Result<Check> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut e = [0.0f64; 7];
    let half = c(0.5, 0.0);
    for _ in 0..cfg.samples {
        let x = random_ball(&mut rng, 0.2, 2.0);
        e[0] = e[0].max((Ball.grad_norm(x)? - 1.0).abs());
        let z = random_sphere(&mut rng);
        let w = random_sphere(&mut rng);
        e[1] = e[1]
            .max((bracket(&Ball, Slot::L(z), Slot::L(z))? - half).norm())
            .max((bracket(&Ball, Slot::N(z), Slot::N(z))? - half).norm());
        e[2] = e[2].max(bracket(&Ball, Slot::L(z), Slot::N(z))?.norm());
        let d2 = z.dist_sqr(w);
        let s = pairing(&Ball, Pairing::NDisp, z, w)?.norm_sqr() + pairing(&Ball, Pairing::LDisp, z, w)?.norm_sqr();
        e[3] = e[3].max((s - 2.0 * d2).abs());
        e[4] = e[4].max((s - d2).abs());
        let chord = 2.0 - 2.0 * (z.z1 * w.z1.conj()).re - 2.0 * (z.z2 * w.z2.conj()).re;
        e[5] = e[5].max((d2 - chord).abs());
        e[6] = e[6].max(bracket_ln_n(z)?.norm());
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let parts = vec![
        Part::at_most("|grad delta| = 1", e[0], 1e-12),
        Part::at_most("(L,L) = (N,N) = 1/2", e[1], 1e-12),
        Part::at_most("(L,N) = 0", e[2], 1e-12),
        Part::at_most("|<N.(z-w)>|^2 + |<L.(z-w)>|^2 = 2|z-w|^2", e[3], 1e-12),
        Part::at_most("|z-w|^2 = 2 - 2Re z1 conj w1 - 2Re z2 conj w2", e[5], 1e-12),
        Part::at_most("([L,N],N) = 0", e[6], 1e-12),
        Part::at_most("runtime (s)", elapsed, 5.0),
    ];
    Ok(Check::new(
        "identities",
        Some(1),
        parts,
        json!({
            "samples": cfg.samples,
            "pairing_sum_equals_dist_sqr_error": e[4],
            "note": "the pairing sum equals |z-w|^2 (one factor of 2 below the stated identity)",
        }),
    ))
}

/// □ = −Δ, ∂̄∂̄ = 0 and the adjointness of ∂̄ and ∂̄*.
pub fn operator_algebra_check(cfg: &ExperimentConfig) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let (mut e_box, mut e_dd) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let s = random_poly(&mut rng, 4);
        let t = random_poly(&mut rng, 4);
        let (ls, lt) = (s.laplacian(), t.laplacian());
        let u = Form01::standard(s.clone(), t);
        for _ in 0..10 {
            let z = random_ball(&mut rng, 0.2, 0.95);
            let b = box_apply_std(&u, z)?;
            e_box = e_box.max(diff2(b, [-ls.eval(z), -lt.eval(z)]));
            e_dd = e_dd.max(dbar_dbar_scalar(&s, z)?.norm());
        }
    }
    let grid = InteriorGrid::new(cfg.interior_radial, cfg.interior_shell)?;
    let vanish = (Field::one() - Field::norm_sqr()).powi(2);
    let mut e_adj = 0.0f64;
    for _ in 0..3 {
        let a = vanish.clone() * random_poly(&mut rng, 3);
        let u = Form01::standard(a.diff(2) + random_poly(&mut rng, 3), a.diff(3) + random_poly(&mut rng, 3));
        let lhs = grid.integrate(|z| {
            let d = dbar_scalar(&a, z).unwrap_or_default();
            let uf = u.eval_in(Basis::Frame, z).unwrap_or_default();
            2.0 * (d[0] * uf[0].conj() + d[1] * uf[1].conj())
        });
        let rhs = grid.integrate(|z| a.eval(z) * dbar_star_form(&u, z).unwrap_or_default().conj());
        e_adj = e_adj.max((lhs - rhs).norm() / lhs.norm());

        let v = Form01::standard(vanish.clone() * random_poly(&mut rng, 3), vanish.clone() * random_poly(&mut rng, 3));
        let top = TopForm {
            coef: v.c[1].diff(2) - v.c[0].diff(3) + random_poly(&mut rng, 3),
        };
        let lhs = grid.integrate(|z| 4.0 * dbar_form(&v, z).unwrap_or_default() * top.coef.eval(z).conj());
        let rhs = grid.integrate(|z| {
            let vf = v.eval_in(Basis::Frame, z).unwrap_or_default();
            let d = dbar_star_top(&top, z).unwrap_or_default();
            2.0 * (vf[0] * d[0].conj() + vf[1] * d[1].conj())
        });
        e_adj = e_adj.max((lhs - rhs).norm() / lhs.norm());
    }
    let parts = vec![
        Part::at_most("box = -Laplacian (20 fields)", e_box, 1e-8),
        Part::at_most("dbar dbar = 0", e_dd, 1e-10),
        Part::at_most("adjointness relative error", e_adj, 1e-5),
    ];
    Ok(Check::new(
        "operator-algebra",
        Some(3),
        parts,
        json!({ "interior_radial": cfg.interior_radial, "interior_shell": cfg.interior_shell }),
    ))
}

// ---------------------------------------------------------------- kernels

fn pole() -> PointC2 {
    PointC2::new(c(1.0, 0.0), c(0.0, 0.0))
}

/// Generic-frame against closed-form kernels, plus spot values.
pub fn kernels_check(cfg: &ExperimentConfig) -> Result<(Check, Vec<(PointC2, PointC2)>)> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xcafe);
    let pairs: Vec<(PointC2, PointC2)> = (0..100).map(|_| (random_sphere(&mut rng), random_sphere(&mut rng))).collect();
    let mut worst = [0.0f64; 4];
    for &(z, w) in &pairs {
        for (k, name) in KernelName::ALL.into_iter().enumerate() {
            let a = kernel_eval(name, z, w, KernelMode::Generic)?;
            let b = kernel_eval(name, z, w, KernelMode::Ball)?;
            for i in 0..2 {
                for j in 0..2 {
                    worst[k] = worst[k].max((a[i][j] - b[i][j]).norm());
                }
            }
        }
    }
    let e2 = PointC2::new(c(0.0, 0.0), c(1.0, 0.0));
    let m1 = PointC2::new(c(-1.0, 0.0), c(0.0, 0.0));
    let pi2 = PI * PI;
    let mut spot = 0.0f64;
    for mode in [KernelMode::Generic, KernelMode::Ball] {
        let s = kernel_eval(KernelName::S, pole(), e2, mode)?;
        let t = kernel_eval(KernelName::T, pole(), e2, mode)?;
        let r = kernel_eval(KernelName::R, pole(), m1, mode)?;
        spot = spot
            .max((s[0][1] - c(-1.0 / (8.0 * pi2), 0.0)).norm())
            .max((t[0][0] - c(1.0 / (4.0 * pi2), 0.0)).norm())
            .max((r[0][0] - c(1.0 / (4.0 * pi2), 0.0)).norm())
            .max((r[1][1] - c(1.0 / (4.0 * pi2), 0.0)).norm());
    }
    let elapsed = t0.elapsed().as_secs_f64();
    let mut parts: Vec<Part> = KernelName::ALL
        .into_iter()
        .zip(worst)
        .map(|(n, e)| Part::at_most(format!("{n} generic vs closed form"), e, 1e-12))
        .collect();
    parts.push(Part::at_most("spot values", spot, 1e-13));
    parts.push(Part::at_most("runtime (s)", elapsed, 5.0));
    Ok((Check::new("kernels", Some(2), parts, json!({ "pairs": pairs.len() })), pairs))
}

fn write_kernel_csv(path: &Path, pairs: &[(PointC2, PointC2)]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["kernel"].iter().map(|s| s.to_string()).collect();
    for p in ["z", "w"] {
        for k in 0..4 {
            header.push(format!("{p}{k}"));
        }
    }
    for i in 1..=2 {
        for j in 1..=2 {
            header.push(format!("k{i}{j}_re"));
            header.push(format!("k{i}{j}_im"));
        }
    }
    wtr.write_record(&header)?;
    for &(z, w) in pairs {
        for name in KernelName::ALL {
            let k = kernel_eval(name, z, w, KernelMode::Ball)?;
            let mut row = vec![name.to_string()];
            row.extend(z.to_real().iter().chain(w.to_real().iter()).map(|x| x.to_string()));
            for r in k.iter() {
                for v in r {
                    row.push(v.re.to_string());
                    row.push(v.im.to_string());
                }
            }
            wtr.write_record(&row)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- Green identity

fn probes(seed: u64, n: usize, r_max: f64) -> Vec<PointC2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    (0..n).map(|_| random_ball(&mut rng, 0.0, r_max)).collect()
}

fn options(cfg: &ExperimentConfig) -> PotentialOptions {
    PotentialOptions {
        volume: cfg.solver.volume,
        layer: cfg.layer,
    }
}

/// Max over probes of |u_rec − u| relative to max |u|, with ψ = γu and φ = Bu
/// sampled on the grid.
pub fn green_error(e: &CatalogEntry, grid: &BoundaryGrid, pts: &[PointC2], opts: &PotentialOptions) -> Result<f64> {
    let u = exact_solution(e)?;
    let psi = LayerDensity::double(trace_gamma(u, grid)?);
    let phi = LayerDensity::single(conormal_on_grid(u, grid)?);
    let f = VolumeData::unsampled(e.f.clone());
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for &z in pts {
        let rec = green_reconstruct(&f, &psi, &phi, grid, z, opts)?;
        let ex = u.eval(z);
        num = num.max(diff2(rec, ex));
        den = den.max(norm2(ex));
    }
    Ok(if den > 0.0 { num / den } else { num })
}

pub const GREEN_FIELDS: [&str; 5] = ["holo:z1z2", "harm:z1zb2", "harm:exp", "poly:r2", "poly:mixed"];

pub fn green_check(cfg: &ExperimentConfig) -> Result<Check> {
    let t0 = Instant::now();
    let fields = cfg.fields_or(&GREEN_FIELDS);
    let pts = probes(cfg.seed, 8, 0.7);
    let opts = options(cfg);
    let grids = cfg.grids.iter().map(|&g| BoundaryGrid::new(g)).collect::<Result<Vec<_>>>()?;
    let tol = 1e-3 * cfg.tol_profile.scale();
    let mut parts = Vec::new();
    let mut table = serde_json::Map::new();
    let mut harmonic = (0, 0);
    for name in &fields {
        let e = catalog(name, cfg.seed)?;
        if e.harmonic {
            harmonic.0 += 1;
        } else {
            harmonic.1 += 1;
        }
        let errs = grids.iter().map(|g| green_error(&e, g, &pts, &opts)).collect::<Result<Vec<_>>>()?;
        parts.push(Part::at_most(format!("{name} baseline relative error"), errs[errs.len() - 1], tol));
        parts.push(Part::flag(format!("{name} strictly decreasing"), errs.len() >= 3 && decreasing(&errs, 1e-12)));
        table.insert(name.clone(), json!(errs));
    }
    let elapsed = t0.elapsed().as_secs_f64();
    parts.push(Part::at_least("manufactured fields", fields.len() as f64, 5.0));
    parts.push(Part::flag("harmonic and non-harmonic fields", harmonic.0 > 0 && harmonic.1 > 0));
    parts.push(Part::at_most("runtime (s)", elapsed, 180.0));
    Ok(Check::new(
        "green-identity",
        Some(4),
        parts,
        json!({ "grids": cfg.grids, "errors": table, "probes": pts.len(), "probe_radius": 0.7 }),
    ))
}

/// Radial limits of SL and DL against S, (T − id)/2, (T* + id)/2 and R = 0.
pub fn jump_check(cfg: &ExperimentConfig) -> Result<Check> {
    let psi = |w: PointC2| [w.z1 + c(0.5, 0.0) * w.z2.conj() * w.z2.conj(), c(0.3, 0.0) + w.z2];
    let phi = |w: PointC2| [c(1.0, 0.2) * w.z1.conj() * w.z2, c(0.7, 0.0) - w.z1 * w.z1];
    let hs = [0.08, 0.04, 0.02, 0.01];
    let labels = ["gamma SL = S", "gamma DL = (T - id)/2", "B SL = (T* + id)/2", "-B DL = R"];
    let tol = 1e-3 * cfg.tol_profile.scale();
    let mut parts = Vec::new();
    let mut details = Vec::new();
    let nodes = [pole(), PointC2::real([0.3, -0.5, 0.7, 0.1]).normalized()];
    for (ni, &z) in nodes.iter().enumerate() {
        let r = jump_relations(psi, phi, z, &hs, &cfg.solver, &cfg.layer)?;
        for k in 0..4 {
            let scale = r.scale[k].max(1.0);
            let rel: Vec<f64> = r.errors[k].iter().map(|e| e / scale).collect();
            parts.push(Part::flag(format!("node {ni}: {} decreasing", labels[k]), decreasing(&rel, 1e-5)));
            parts.push(Part::at_most(format!("node {ni}: {} limit", labels[k]), r.limit_errors[k] / scale, tol));
        }
        details.push(r);
    }
    Ok(Check::new("jump-relations", Some(5), parts, json!({ "nodes": details })))
}

// ---------------------------------------------------------------- solve

/// Relative L² error of a density against its exact values.
pub fn density_error(grid: &BoundaryGrid, got: &[C64], exact: &[C64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((g, e), w) in got.iter().zip(exact).zip(&grid.weights) {
        num += w * (g - e).norm_sqr();
        den += w * e.norm_sqr();
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// Δ by second-order central differences in the four real directions.
fn fd_laplacian<F: Fn(PointC2) -> Result<[C64; 2]>>(u: F, z: PointC2, h: f64) -> Result<[C64; 2]> {
    let x = z.to_real();
    let u0 = u(z)?;
    let mut acc = [C64::new(0.0, 0.0); 2];
    for k in 0..4 {
        let mut p = x;
        let mut m = x;
        p[k] += h;
        m[k] -= h;
        let (up, um) = (u(PointC2::real(p))?, u(PointC2::real(m))?);
        for j in 0..2 {
            acc[j] += (up[j] + um[j] - 2.0 * u0[j]) / (h * h);
        }
    }
    Ok(acc)
}

pub struct SolveOutcome {
    pub report: SolveReport,
    pub psi_error: Option<f64>,
    pub phi_error: Option<f64>,
    pub psi: BoundaryField,
    pub phi: BoundaryField,
}

pub fn solve_on_grid(e: &CatalogEntry, grid: &BoundaryGrid, cfg: &SolverConfig) -> Result<SolveOutcome> {
    let f = VolumeData::unsampled(e.f.clone());
    let sys = assemble_reduced_system(&f, grid, cfg)?;
    let report = solve_bie(&sys, grid, cfg)?;
    let (psi, phi) = solved_densities(&report);
    let (mut pe, mut fe) = (None, None);
    if let (Some(u), true) = (&e.u, e.satisfies_bc) {
        let g = trace_gamma(u, grid)?.component(0);
        let b = conormal_on_grid(u, grid)?.component(1);
        pe = Some(density_error(grid, &report.psi1, &g));
        fe = Some(density_error(grid, &report.phi2, &b));
    }
    Ok(SolveOutcome {
        report,
        psi_error: pe,
        phi_error: fe,
        psi,
        phi,
    })
}

fn write_density_csv(path: &Path, grid: &BoundaryGrid, psi: &BoundaryField, phi: &BoundaryField) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(["x0", "x1", "x2", "x3", "weight", "psi1_re", "psi1_im", "phi2_re", "phi2_im"])?;
    for i in 0..grid.len() {
        let mut row: Vec<String> = grid.nodes[i].to_real().iter().map(|x| x.to_string()).collect();
        row.push(grid.weights[i].to_string());
        for v in [psi.values[i][0], phi.values[i][1]] {
            row.push(v.re.to_string());
            row.push(v.im.to_string());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub struct SolveStudy {
    pub check: Check,
    pub solves: Vec<SolveReport>,
}

/// Reduced solve on every grid, manufactured recovery and the finite-difference
/// check −□u = f of the reconstruction at the baseline.
pub fn solve_check(cfg: &ExperimentConfig) -> Result<SolveStudy> {
    let fields = cfg.fields_or(&["bc:poly"]);
    let tol = 5e-2 * cfg.tol_profile.scale();
    let mut parts = Vec::new();
    let mut solves = Vec::new();
    let mut details = serde_json::Map::new();
    let grids = cfg.grids.iter().map(|&g| BoundaryGrid::new(g)).collect::<Result<Vec<_>>>()?;
    for name in &fields {
        let e = catalog(name, cfg.seed)?;
        let mut psi_err = Vec::new();
        let mut phi_err = Vec::new();
        let mut dropped = Vec::new();
        let mut last = None;
        for grid in &grids {
            let out = solve_on_grid(&e, grid, &cfg.solver)?;
            psi_err.extend(out.psi_error);
            phi_err.extend(out.phi_error);
            dropped.push(out.report.dropped_residual);
            solves.push(out.report.clone());
            last = Some(out);
        }
        let Some(last) = last else { continue };
        let base = &grids[grids.len() - 1];
        if e.f.c.iter().all(|c| c.is_zero()) {
            let m = last.report.psi1.iter().chain(&last.report.phi2).map(|v| v.norm()).fold(0.0, f64::max);
            parts.push(Part::at_most(format!("{name}: zero densities"), m, 0.0));
            parts.push(Part::at_most(format!("{name}: zero residual"), last.report.relative_residual, 0.0));
        }
        if !psi_err.is_empty() {
            parts.push(Part::at_most(format!("{name}: psi1 relative L2 error"), psi_err[psi_err.len() - 1], tol));
            parts.push(Part::flag(format!("{name}: psi1 error decreasing"), decreasing(&psi_err, 1e-12)));
            parts.push(Part::flag(format!("{name}: dropped-row residual decreasing"), decreasing(&dropped, 1e-12)));
            // reconstruction and −□u = f by finite differences
            let f = VolumeData::unsampled(e.f.clone());
            let opts = options(cfg);
            let (psi, phi) = (LayerDensity::double(last.psi.clone()), LayerDensity::single(last.phi.clone()));
            let rec = |z: PointC2| green_reconstruct(&f, &psi, &phi, base, z, &opts);
            let (mut num, mut den) = (0.0f64, 0.0f64);
            for z in probes(cfg.seed ^ 7, 4, 0.6) {
                let lap = fd_laplacian(rec, z, 0.03)?;
                let fz = e.f.eval(z);
                num = num.max(diff2(lap, fz));
                den = den.max(norm2(fz));
            }
            let fd = if den > 0.0 { num / den } else { num };
            parts.push(Part::at_most(format!("{name}: -box u = f by finite differences"), fd, tol));
            details.insert(
                name.clone(),
                json!({ "psi1_error": psi_err, "phi2_error": phi_err, "dropped_residual": dropped, "fd_relative_error": fd }),
            );
        } else {
            details.insert(name.clone(), json!({ "dropped_residual": dropped }));
        }
        if let Some(dir) = &cfg.out {
            let file = format!("densities_{}.csv", name.replace(':', "_"));
            write_density_csv(&dir.join(file), base, &last.psi, &last.phi)?;
        }
    }
    let mut check = Check::new("reduced-solve", Some(9), parts, Value::Object(details));
    if let Some(v) = check.details.get(&fields[0]).and_then(|d| d.get("psi1_error")).and_then(|v| v.as_array()) {
        let errs: Vec<f64> = v.iter().filter_map(|x| x.as_f64()).collect();
        let n: Vec<f64> = cfg.grids.iter().map(|g| g.len() as f64).collect();
        if errs.len() == n.len() {
            check.order = loglog_slope(&n, &errs);
        }
    }
    Ok(SolveStudy { check, solves })
}

// ---------------------------------------------------------------- rigidity

/// Pinned (b = 0) against free constant-velocity solves.
pub fn constant_velocity_check(cfg: &ExperimentConfig) -> Result<Check> {
    let t0 = Instant::now();
    let fields = cfg.fields_or(&["velocity:asym", "velocity:radial"]);
    let grid = BoundaryGrid::new(cfg.baseline())?;
    let mut parts = Vec::new();
    let mut details = serde_json::Map::new();
    for name in &fields {
        let e = catalog(name, cfg.seed)?;
        let f = VolumeData::unsampled(e.f.clone());
        let rig = rigidity_value(&f, &cfg.solver.volume)?;
        let cv = solve_constant_velocity(&f, &grid, &cfg.solver)?;
        let (p, q) = (cv.pole_residual_pinned, cv.pole_residual_free);
        let ratio = if p == 0.0 && q == 0.0 { 1.0 } else { p / q };
        let scale = e.f.c.iter().map(|c| c.eval(pole()).norm()).fold(1.0, f64::max);
        if rig.t.norm() > 1e-8 * scale {
            parts.push(Part::at_least(format!("{name}: pinned/free residual ratio (t != 0)"), ratio, 10.0));
        } else {
            parts.push(Part::at_most(format!("{name}: pinned/free residual ratio (t = 0)"), ratio, 2.0));
        }
        details.insert(
            name.clone(),
            json!({
                "t": rig.t, "free": { "a": cv.free.a, "b": cv.free.b, "block_residuals": cv.free.block_residuals },
                "pinned": { "a": cv.pinned.a, "block_residuals": cv.pinned.block_residuals },
                "pole_residual_free": q, "pole_residual_pinned": p, "ratio": ratio,
            }),
        );
    }
    let elapsed = t0.elapsed().as_secs_f64();
    parts.push(Part::at_most("runtime (s)", elapsed, 300.0));
    Ok(Check::new("constant-velocity", Some(7), parts, Value::Object(details)))
}

fn refined_volume(v: &VolumeRuleSpec) -> VolumeRuleSpec {
    VolumeRuleSpec {
        n_theta: v.n_theta + v.n_theta / 2,
        s2_theta: v.s2_theta + v.s2_theta / 2,
        s2_az: v.s2_az + v.s2_az / 2,
        n_rho: v.n_rho + v.n_rho / 2,
    }
}

/// t = (Gf, dz̄₂)(1, 0): size against refinement variation, frame cross-check.
pub fn rigidity_check(cfg: &ExperimentConfig) -> Result<Check> {
    let fields = cfg.fields_or(&["velocity:asym", "bump:offcenter"]);
    let mut parts = Vec::new();
    let mut details = serde_json::Map::new();
    for name in &fields {
        let e = catalog(name, cfg.seed)?;
        let f = VolumeData::unsampled(e.f.clone());
        let r = rigidity_value(&f, &cfg.solver.volume)?;
        let r2 = rigidity_value(&f, &refined_volume(&cfg.solver.volume))?;
        let variation = (r.t - r2.t).norm();
        parts.push(Part::at_most(format!("{name}: frame cross-check |(gamma Gf)_1 + t|"), (r.frame_first + r.t).norm(), 1e-6));
        if r.t.norm() > 0.0 {
            parts.push(Part::at_least(format!("{name}: |t| / refinement variation"), r.t.norm() / variation.max(1e-300), 10.0));
        }
        details.insert(name.clone(), json!({ "t": r.t, "s": r.s, "frame_first": r.frame_first, "refined_t": r2.t }));
    }
    Ok(Check::new("rigidity", None, parts, Value::Object(details)))
}

/// First component of S(0, a) at (1, 0) on the baseline grid.
pub fn odd_symmetry_check(cfg: &ExperimentConfig) -> Result<Check> {
    let grid = BoundaryGrid::new(cfg.baseline())?;
    let a = c(0.4, -1.3);
    let rows = target_rows(&grid, &[KernelName::S], grid.nodes[grid.pole_index()], &cfg.solver.nystrom, &cfg.solver.eps)?;
    let mut v = [c(0.0, 0.0); 2];
    for b in &rows[0] {
        v[0] += b[0][1] * a;
        v[1] += b[1][1] * a;
    }
    let analytic = apply_analytic(KernelName::S, |_| [c(0.0, 0.0), a], pole(), &cfg.solver.eps, &cfg.solver.nystrom)?;
    let parts = vec![
        Part::flag("grid closed under (z1, z2) -> (z1, -z2)", grid.symmetric),
        Part::flag("(1,0) is a node", (grid.nodes[grid.pole_index()] - pole()).norm() < 1e-14),
        Part::at_most("|S(0,a)_1| at (1,0), grid rows", v[0].norm(), 1e-12),
        Part::at_most("|S(0,a)_1| at (1,0), analytic density", analytic.value[0].norm(), 1e-12),
    ];
    Ok(Check::new(
        "odd-symmetry",
        Some(6),
        parts,
        json!({ "grid": grid.spec, "value": v, "analytic": analytic.value }),
    ))
}

// ---------------------------------------------------------------- KMH

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KmhTerms {
    pub dbar_sq: f64,
    pub dbar_star_sq: f64,
    pub volume: f64,
    pub boundary: f64,
}

impl KmhTerms {
    /// Smallest C with C(‖∂̄u‖² + ‖∂̄*u‖²) ≥ ∫(u,u) + ∫ Hess_δ(u,u).
    pub fn min_c(&self) -> f64 {
        let den = self.dbar_sq + self.dbar_star_sq;
        let num = self.volume + self.boundary;
        if den > 0.0 {
            num / den
        } else if num <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

pub fn kmh_terms(u: &Form01, interior: &InteriorGrid, boundary: &BoundaryGrid) -> Result<KmhTerms> {
    let dbar_sq = interior.integrate(|z| C64::new(4.0 * dbar_form(u, z).unwrap_or_default().norm_sqr(), 0.0)).re;
    let dbar_star_sq = interior.integrate(|z| C64::new(dbar_star_form(u, z).unwrap_or_default().norm_sqr(), 0.0)).re;
    let volume = interior.integrate(|z| C64::new(2.0 * norm2(u.eval(z)).powi(2), 0.0)).re;
    let b = boundary.integrate(|z| levi_hess(z, u.eval(z)));
    Ok(KmhTerms {
        dbar_sq,
        dbar_star_sq,
        volume,
        boundary: b.re,
    })
}

pub fn kmh_check(cfg: &ExperimentConfig) -> Result<Check> {
    let fields = cfg.fields_or(&(0..10).map(|k| format!("kmh:{k}")).collect::<Vec<_>>().iter().map(|s| s.as_str()).collect::<Vec<_>>());
    let coarse = (
        InteriorGrid::new(6, GridSpec::new(7, 12))?,
        BoundaryGrid::new(GridSpec::new(7, 12))?,
    );
    let fine = (
        InteriorGrid::new(8, GridSpec::new(9, 16))?,
        BoundaryGrid::new(GridSpec::new(9, 16))?,
    );
    let mut worst_boundary = f64::INFINITY;
    let (mut c_coarse, mut c_fine) = (0.0f64, 0.0f64);
    let mut table = serde_json::Map::new();
    for name in &fields {
        let e = catalog(name, cfg.seed)?;
        let u = exact_solution(&e)?;
        let a = kmh_terms(u, &coarse.0, &coarse.1)?;
        let b = kmh_terms(u, &fine.0, &fine.1)?;
        worst_boundary = worst_boundary.min(a.boundary).min(b.boundary);
        c_coarse = c_coarse.max(a.min_c());
        c_fine = c_fine.max(b.min_c());
        table.insert(name.clone(), json!({ "terms": b, "min_c": b.min_c() }));
    }
    let zero = kmh_terms(&Form01::zero(), &coarse.0, &coarse.1)?;
    let zero_sum = zero.dbar_sq + zero.dbar_star_sq + zero.volume + zero.boundary.abs();
    let parts = vec![
        Part::at_least("min boundary term Hess_delta(u,u)", worst_boundary, -1e-10),
        Part::flag("minimal C finite", c_fine.is_finite() && c_fine > 0.0),
        Part::at_most("minimal C change under refinement (relative)", (c_fine - c_coarse).abs() / c_fine, 0.1),
        Part::at_most("u = 0 gives zero terms", zero_sum, 0.0),
    ];
    Ok(Check::new(
        "kmh",
        Some(8),
        parts,
        json!({ "forms": table, "min_c": c_fine, "min_c_coarse": c_coarse }),
    ))
}

// ---------------------------------------------------------------- convergence

/// Error sequence of one quantity over the configured grids.
pub fn convergence_study(cfg: &ExperimentConfig) -> Result<Check> {
    if cfg.grids.len() < 3 {
        return Err(Error::Config("convergence-study needs at least 3 grids".into()));
    }
    let n: Vec<f64> = cfg.grids.iter().map(|g| g.len() as f64).collect();
    let grids = cfg.grids.iter().map(|&g| BoundaryGrid::new(g)).collect::<Result<Vec<_>>>()?;
    let (errs, expected, floor): (Vec<f64>, &str, f64) = match cfg.study.as_str() {
        "quadrature" => {
            // ∫_{S³} |z₁|⁴ = 2π²/3
            let e = grids
                .iter()
                .map(|g| (g.integrate(|z| C64::new(z.z1.norm_sqr().powi(2), 0.0)).re - 2.0 * PI * PI / 3.0).abs())
                .collect();
            (e, "exact for low-degree polynomials (errors at round-off, slope near 0)", 1e-12)
        }
        "identities" => {
            let e = grids
                .iter()
                .map(|g| {
                    g.nodes.iter().try_fold(0.0f64, |m, &z| -> Result<f64> {
                        let h = (bracket(&Ball, Slot::L(z), Slot::L(z))? - c(0.5, 0.0)).norm();
                        Ok(m.max(h).max(bracket_ln_n(z)?.norm()))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (e, "flat at round-off (slope near 0)", 1e-12)
        }
        "green" => {
            let e = catalog(cfg.fields.first().map(|s| s.as_str()).unwrap_or("harm:exp"), cfg.seed)?;
            let pts = probes(cfg.seed, 8, 0.7);
            let opts = options(cfg);
            let errs = grids.iter().map(|g| green_error(&e, g, &pts, &opts)).collect::<Result<Vec<_>>>()?;
            (errs, "spectral (errors decrease faster than any power)", 1e-12)
        }
        "solve" => {
            let e = catalog(cfg.fields.first().map(|s| s.as_str()).unwrap_or("bc:poly"), cfg.seed)?;
            let errs = grids
                .iter()
                .map(|g| solve_on_grid(&e, g, &cfg.solver).map(|o| o.psi_error.unwrap_or(f64::NAN)))
                .collect::<Result<Vec<_>>>()?;
            (errs, "spectral (errors decrease faster than any power)", 1e-12)
        }
        other => {
            return Err(Error::Unknown {
                kind: "study",
                name: other.to_string(),
                expected: "quadrature, identities, green, solve".into(),
            })
        }
    };
    let monotone = decreasing(&errs, floor);
    let mut check = Check::new(
        "convergence",
        None,
        vec![Part::flag("monotone error sequence", monotone)],
        json!({ "study": cfg.study, "nodes": n, "errors": errs, "expected": expected, "flagged": !monotone }),
    );
    check.order = loglog_slope(&n, &errs);
    Ok(check)
}

// ---------------------------------------------------------------- driver

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let t0 = Instant::now();
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
    }
    let mut solves = Vec::new();
    let checks = match command {
        Command::VerifyIdentities => vec![identities_check(cfg)?, operator_algebra_check(cfg)?],
        Command::DumpKernels => {
            let (check, pairs) = kernels_check(cfg)?;
            if let Some(dir) = &cfg.out {
                write_kernel_csv(&dir.join("kernels.csv"), &pairs)?;
            }
            vec![check]
        }
        Command::GreenCheck => vec![green_check(cfg)?, jump_check(cfg)?],
        Command::Solve => {
            let s = solve_check(cfg)?;
            solves = s.solves;
            vec![s.check]
        }
        Command::ConstantVelocity => vec![constant_velocity_check(cfg)?],
        Command::Rigidity => vec![rigidity_check(cfg)?, odd_symmetry_check(cfg)?],
        Command::KmhCheck => vec![kmh_check(cfg)?],
        Command::ConvergenceStudy => vec![convergence_study(cfg)?],
    };
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command,
        seed: cfg.seed,
        tol_profile: cfg.tol_profile,
        checks,
        solves,
        elapsed_s: t0.elapsed().as_secs_f64(),
    };
    if let Some(dir) = &cfg.out {
        fs::write(dir.join(format!("{}.json", command.name())), report.to_json()?)?;
    }
    Ok(report)
}
