use dbar_bie::expr::Field;
use dbar_bie::forms::{conormal_on_grid, trace_gamma, Basis, Form01};
use dbar_bie::geometry::{BoundaryGrid, GridSpec, InteriorGrid};
use dbar_bie::potentials::*;
use dbar_bie::quadrature::VolumeRuleSpec;
use dbar_bie::{Error, PointC2, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_interior(rng: &mut ChaCha8Rng, r_max: f64) -> PointC2 {
    let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let r = rng.gen_range(0.1..r_max);
    PointC2::real(x).normalized().scale(r)
}

/// Central-difference R⁴ Laplacian of a vector-valued map.
fn fd_laplacian<F: Fn(PointC2) -> [C64; 2]>(f: F, x: PointC2, h: f64) -> [C64; 2] {
    let xr = x.to_real();
    let f0 = f(x);
    let mut out = [c(0.0, 0.0); 2];
    for k in 0..4 {
        let mut p = xr;
        let mut m = xr;
        p[k] += h;
        m[k] -= h;
        let (fp, fm) = (f(PointC2::real(p)), f(PointC2::real(m)));
        for i in 0..2 {
            out[i] += (fp[i] - 2.0 * f0[i] + fm[i]) / (h * h);
        }
    }
    out
}

#[test]
fn g0_examples() {
    let z = PointC2::new(c(1.0, 0.0), c(0.0, 0.0));
    let w = PointC2::new(c(-1.0, 0.0), c(0.0, 0.0));
    assert!((g0_kernel(z, w).unwrap() + 1.0 / (16.0 * PI * PI)).abs() < 1e-16);
    assert!(matches!(g0_kernel(z, z), Err(Error::Coincident)));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let a = random_interior(&mut rng, 2.0);
        let b = random_interior(&mut rng, 2.0);
        assert_eq!(g0_kernel(a, b).unwrap(), g0_kernel(b, a).unwrap());
        let far = a + 2.0 * (b - a);
        let ratio = g0_kernel(a, far).unwrap() / g0_kernel(a, b).unwrap();
        assert!((ratio - 0.25).abs() < 1e-12);
    }
}

#[test]
fn newton_of_one_at_center() {
    let f = VolumeData::unsampled(Form01::standard(Field::one(), Field::zero()));
    let v = newton_potential(&f, PointC2::real([0.0; 4]), Basis::Standard, &VolumeRuleSpec::default()).unwrap();
    assert!((v[0] + 0.25).norm() < 1e-12, "{}", v[0]);
    assert_eq!(v[1], c(0.0, 0.0));
    let zero = VolumeData::unsampled(Form01::zero());
    let x = PointC2::real([0.1, 0.2, -0.3, 0.0]);
    assert_eq!(
        newton_potential(&zero, x, Basis::Standard, &VolumeRuleSpec::default()).unwrap(),
        [c(0.0, 0.0); 2]
    );
}

#[test]
fn newton_rejects_points_outside() {
    let f = VolumeData::unsampled(Form01::standard(Field::one(), Field::zero()));
    let x = PointC2::real([1.0, 0.0, 0.0, 0.0]);
    assert!(matches!(
        newton_potential(&f, x, Basis::Standard, &VolumeRuleSpec::default()),
        Err(Error::NotInterior(_))
    ));
}

#[test]
fn newton_laplacian_reproduces_datum() {
    // smooth bump compactly supported inside the ball
    let d1 = Field::z1() - Field::real(0.2);
    let s = (d1.clone() * d1.conj() + Field::z2() * Field::zb2()) * Field::real(1.0 / 0.36);
    let bump = s.bump();
    let f = VolumeData::unsampled(Form01::standard(bump.clone(), Field::z2() * bump.clone()));
    let spec = VolumeRuleSpec {
        n_theta: 32,
        s2_theta: 12,
        s2_az: 24,
        n_rho: 48,
    };
    for x in [
        PointC2::new(c(0.3, 0.1), c(0.05, -0.1)),
        PointC2::new(c(0.1, -0.05), c(0.2, 0.1)),
    ] {
        let lap = fd_laplacian(
            |y| newton_potential(&f, y, Basis::Standard, &spec).unwrap(),
            x,
            4e-3,
        );
        let want = f.form.eval(x);
        for i in 0..2 {
            assert!((lap[i] - want[i]).norm() <= 1e-3 * want[0].norm(), "{} {}", lap[i], want[i]);
        }
    }
}

#[test]
fn newton_frame_and_standard_paths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let f = VolumeData::unsampled(Form01::standard(
        Field::z1() * Field::zb2() + Field::real(0.5),
        Field::z2() * Field::z2() - Field::zb1(),
    ));
    let spec = VolumeRuleSpec::default();
    for _ in 0..20 {
        let z = random_interior(&mut rng, 0.9);
        let fr = newton_potential(&f, z, Basis::Frame, &spec).unwrap();
        let st = newton_potential(&f, z, Basis::Standard, &spec).unwrap();
        let back = dbar_bie::forms::frame_to_std(z, fr);
        assert!((back[0] - st[0]).norm() < 1e-8 && (back[1] - st[1]).norm() < 1e-8);
    }
}

#[test]
fn frame_matrix_solution_is_hermitian() {
    let z = PointC2::new(c(0.3, 0.2), c(-0.4, 0.1));
    let w = PointC2::new(c(-0.2, 0.5), c(0.1, 0.3));
    let a = g_box_frame(z, w).unwrap();
    let b = g_box_frame(w, z).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((a[i][j] - b[j][i].conj()).norm() < 1e-15);
        }
    }
}

fn densities(u: &Form01, grid: &BoundaryGrid) -> (LayerDensity, LayerDensity) {
    (
        LayerDensity::double(trace_gamma(u, grid).unwrap()),
        LayerDensity::single(conormal_on_grid(u, grid).unwrap()),
    )
}

#[test]
fn layer_potentials_vanish_on_zero_density() {
    let grid = BoundaryGrid::new(GridSpec::new(5, 8)).unwrap();
    let zero = dbar_bie::forms::BoundaryField::zeros(grid.len());
    let x = PointC2::real([0.1, 0.2, 0.3, 0.1]);
    for q in [LayerQuadrature::Grid, LayerQuadrature::default()] {
        assert_eq!(single_layer(&LayerDensity::single(zero.clone()), &grid, x, &q).unwrap(), [c(0.0, 0.0); 2]);
        assert_eq!(double_layer(&LayerDensity::double(zero.clone()), &grid, x, &q).unwrap(), [c(0.0, 0.0); 2]);
    }
}

#[test]
fn layer_potentials_are_harmonic() {
    let grid = BoundaryGrid::new(GridSpec::new(7, 12)).unwrap();
    let u = Form01::standard(Field::z1() * Field::zb2() + Field::zb1(), Field::z2() * Field::zb1() * Field::zb1());
    let (psi, phi) = densities(&u, &grid);
    let q = LayerQuadrature::Grid;
    for x in [PointC2::real([0.2, -0.1, 0.3, 0.0]), PointC2::real([-0.4, 0.1, 0.0, 0.2])] {
        for dens in [&psi, &phi] {
            let val = layer_jet(dens, &grid, x, &q).unwrap().value;
            let lap = fd_laplacian(|y| layer_jet(dens, &grid, y, &q).unwrap().value, x, 1e-3);
            let scale = val[0].norm().max(val[1].norm());
            assert!(lap[0].norm() < 1e-4 * scale && lap[1].norm() < 1e-4 * scale, "{lap:?} {val:?}");
        }
    }
}

#[test]
fn layer_gradient_matches_finite_differences() {
    let grid = BoundaryGrid::new(GridSpec::new(5, 8)).unwrap();
    let u = Form01::standard(Field::zb1() * Field::z2(), Field::z1());
    let (psi, phi) = densities(&u, &grid);
    let x = PointC2::real([0.1, 0.3, -0.2, 0.1]);
    let h = 1e-6;
    for dens in [&psi, &phi] {
        let jet = layer_jet(dens, &grid, x, &LayerQuadrature::Grid).unwrap();
        let xr = x.to_real();
        let mut gr = [[c(0.0, 0.0); 4]; 2];
        for k in 0..4 {
            let mut p = xr;
            let mut m = xr;
            p[k] += h;
            m[k] -= h;
            let fp = layer_jet(dens, &grid, PointC2::real(p), &LayerQuadrature::Grid).unwrap().value;
            let fm = layer_jet(dens, &grid, PointC2::real(m), &LayerQuadrature::Grid).unwrap().value;
            for i in 0..2 {
                gr[i][k] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let i = c(0.0, 1.0);
        for comp in 0..2 {
            let g = gr[comp];
            let w = [
                0.5 * (g[0] - i * g[1]),
                0.5 * (g[2] - i * g[3]),
                0.5 * (g[0] + i * g[1]),
                0.5 * (g[2] + i * g[3]),
            ];
            for k in 0..4 {
                assert!((w[k] - jet.grad[comp][k]).norm() < 1e-6, "{} {}", w[k], jet.grad[comp][k]);
            }
        }
    }
}

fn green_error(u: &Form01, grid: &BoundaryGrid, points: &[PointC2]) -> f64 {
    let (psi, phi) = densities(u, grid);
    let f = VolumeData::unsampled(Form01::standard(u.c[0].laplacian(), u.c[1].laplacian()));
    let opts = PotentialOptions::default();
    let mut num = 0.0;
    let mut den = 0.0;
    for &z in points {
        let got = green_reconstruct(&f, &psi, &phi, grid, z, &opts).unwrap();
        let want = u.eval(z);
        for i in 0..2 {
            num += (got[i] - want[i]).norm_sqr();
            den += want[i].norm_sqr();
        }
    }
    (num / den).sqrt()
}

fn probes() -> Vec<PointC2> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    (0..8).map(|_| random_interior(&mut rng, 0.7)).collect()
}

#[test]
fn green_identity_harmonic_and_radial() {
    let grid = BoundaryGrid::new(GridSpec::new(7, 12)).unwrap();
    let pts = probes();
    let harmonic = Form01::standard(Field::z1() * Field::z2(), Field::zero());
    let e = green_error(&harmonic, &grid, &pts);
    assert!(e < 1e-3, "harmonic {e}");
    let radial = Form01::standard(Field::norm_sqr(), Field::zero());
    let e = green_error(&radial, &grid, &pts);
    assert!(e < 1e-3, "radial {e}");
}

#[test]
fn green_identity_zero_data() {
    let grid = BoundaryGrid::new(GridSpec::new(5, 8)).unwrap();
    let zero = dbar_bie::forms::BoundaryField::zeros(grid.len());
    let f = VolumeData::unsampled(Form01::zero());
    let v = green_reconstruct(
        &f,
        &LayerDensity::double(zero.clone()),
        &LayerDensity::single(zero),
        &grid,
        PointC2::real([0.2, 0.0, 0.1, 0.0]),
        &PotentialOptions::default(),
    )
    .unwrap();
    assert_eq!(v, [c(0.0, 0.0); 2]);
}

#[test]
fn deep_interior_single_layer_converges() {
    let u = Form01::standard((Field::z1() * Field::real(0.8)).exp(), Field::zb2() * Field::zb1());
    let x = PointC2::real([0.1, -0.2, 0.15, 0.05]);
    let mut prev = None;
    let mut errs = Vec::new();
    let fine = BoundaryGrid::new(GridSpec::new(15, 28)).unwrap();
    let (_, phi_f) = densities(&u, &fine);
    let exact = single_layer(&phi_f, &fine, x, &LayerQuadrature::Grid).unwrap();
    for (n_chi, n_phi) in [(3, 6), (5, 10), (7, 14)] {
        let grid = BoundaryGrid::new(GridSpec::new(n_chi, n_phi)).unwrap();
        let (_, phi) = densities(&u, &grid);
        let v = single_layer(&phi, &grid, x, &LayerQuadrature::Grid).unwrap();
        let e = ((v[0] - exact[0]).norm_sqr() + (v[1] - exact[1]).norm_sqr()).sqrt();
        if let Some(p) = prev {
            assert!(e < p, "{errs:?} {e}");
        }
        errs.push(e);
        prev = Some(e);
    }
}

#[test]
fn field_csv_has_header_and_rows() {
    let pts = lattice(0.5, 0.6);
    let vals = vec![[c(1.0, 0.0), c(0.0, 1.0)]; pts.len()];
    let mut buf = Vec::new();
    write_field_csv(&mut buf, &pts, &vals).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), pts.len() + 1);
    assert!(text.starts_with("x0,x1,x2,x3,s_re"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn green_reconstruction_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let grid = BoundaryGrid::new(GridSpec::new(3, 6)).unwrap();
        let u1 = Form01::standard(Field::z1(), Field::zb2());
        let u2 = Form01::standard(Field::z2() * Field::z1(), Field::one());
        let (p1, f1) = densities(&u1, &grid);
        let (p2, f2) = densities(&u2, &grid);
        let comb = |x: &LayerDensity, y: &LayerDensity| {
            let vals = x.field.values.iter().zip(&y.field.values)
                .map(|(p, q)| [p[0] * a + q[0] * b, p[1] * a + q[1] * b]).collect();
            LayerDensity { field: dbar_bie::forms::BoundaryField { values: vals }, role: x.role }
        };
        let zero = VolumeData::unsampled(Form01::zero());
        let opts = PotentialOptions { layer: LayerQuadrature::Grid, ..Default::default() };
        let z = PointC2::real([0.1, 0.2, -0.1, 0.3]);
        let r1 = green_reconstruct(&zero, &p1, &f1, &grid, z, &opts).unwrap();
        let r2 = green_reconstruct(&zero, &p2, &f2, &grid, z, &opts).unwrap();
        let r = green_reconstruct(&zero, &comb(&p1, &p2), &comb(&f1, &f2), &grid, z, &opts).unwrap();
        for i in 0..2 {
            prop_assert!((r[i] - (r1[i] * a + r2[i] * b)).norm() < 1e-12 * (1.0 + r[i].norm()));
        }
    }
}

#[test]
fn interior_grid_samples_volume_data() {
    let ig = InteriorGrid::new(4, GridSpec::new(3, 6)).unwrap();
    let f = VolumeData::new(Form01::standard(Field::z1(), Field::one()), &ig).unwrap();
    assert_eq!(f.samples.len(), ig.nodes.len());
}
