use dbar_bie::bie::*;
use dbar_bie::forms::{std_to_frame, BoundaryField};
use dbar_bie::geometry::{BoundaryGrid, GridSpec};
use dbar_bie::{PointC2, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PI: f64 = std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn sphere_point(x: [f64; 4]) -> PointC2 {
    PointC2::real(x).normalized()
}

fn random_sphere(rng: &mut ChaCha8Rng) -> PointC2 {
    sphere_point(std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
}

fn pole() -> PointC2 {
    PointC2::new(c(1.0, 0.0), c(0.0, 0.0))
}

fn close(a: [C64; 2], b: [C64; 2], tol: f64) -> bool {
    (a[0] - b[0]).norm() < tol && (a[1] - b[1]).norm() < tol
}

#[test]
fn kernel_spot_values() {
    let z = pole();
    let w = PointC2::new(c(0.0, 0.0), c(1.0, 0.0));
    let s = kernel_eval(KernelName::S, z, w, KernelMode::Ball).unwrap();
    assert!((s[0][1] - c(-1.0 / (8.0 * PI * PI), 0.0)).norm() < 1e-15);
    assert!(s[0][0].norm() < 1e-15);
    let r = kernel_eval(KernelName::R, z, PointC2::new(c(-1.0, 0.0), c(0.0, 0.0)), KernelMode::Ball).unwrap();
    assert!((r[0][0] - c(1.0 / (4.0 * PI * PI), 0.0)).norm() < 1e-15);
    assert!(kernel_eval(KernelName::T, z, z, KernelMode::Generic).is_err());
}

#[test]
fn generic_and_closed_forms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let z = random_sphere(&mut rng);
        let w = random_sphere(&mut rng);
        for name in KernelName::ALL {
            let a = kernel_eval(name, z, w, KernelMode::Generic).unwrap();
            let b = kernel_eval(name, z, w, KernelMode::Ball).unwrap();
            let scale = 1.0 + b.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] - b[i][j]).norm() < 1e-12 * scale, "{name} {i}{j}");
                }
            }
        }
    }
}

#[test]
fn single_layer_kernel_is_hermitian_and_tstar_is_adjoint_of_t() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let z = random_sphere(&mut rng);
        let w = random_sphere(&mut rng);
        let s = kernel_ball(KernelName::S, z, w).unwrap();
        let sw = kernel_ball(KernelName::S, w, z).unwrap();
        let t = kernel_ball(KernelName::T, w, z).unwrap();
        let ts = kernel_ball(KernelName::Tstar, z, w).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((s[i][j] - sw[j][i].conj()).norm() < 1e-12);
                assert!((ts[i][j] - t[j][i].conj()).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn kernel_names_parse() {
    assert_eq!(KernelName::parse("Tstar").unwrap(), KernelName::Tstar);
    assert_eq!(KernelName::parse("T*").unwrap(), KernelName::Tstar);
    assert!(KernelName::parse("Q").is_err());
}

#[test]
fn operators_on_constant_standard_vectors() {
    let eps = EpsSpec::default();
    let ny = NystromSpec::default();
    let a = [c(0.3, -0.2), c(-0.7, 0.4)];
    let density = |w: PointC2| std_to_frame(w, a);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for z in [pole(), random_sphere(&mut rng)] {
        let ma = std_to_frame(z, a);
        let s = apply_analytic(KernelName::S, density, z, &eps, &ny).unwrap();
        assert!(close(s.value, [0.5 * ma[0], 0.5 * ma[1]], 1e-10), "{:?}", s.value);
        for name in [KernelName::T, KernelName::Tstar] {
            let t = apply_analytic(name, density, z, &eps, &ny).unwrap();
            assert!(close(t.value, [-ma[0], -ma[1]], 1e-4), "{name} {:?}", t.value);
        }
    }
}

#[test]
fn printed_hypersingular_finite_part_on_constants() {
    let eps = EpsSpec::default();
    let ny = NystromSpec::default();
    let b = c(0.6, 0.8);
    let r = apply_analytic(KernelName::R, |_| [b, c(0.0, 0.0)], pole(), &eps, &ny).unwrap();
    assert!(close(r.value, [-4.0 * b, c(0.0, 0.0)], 1e-6), "{:?}", r.value);
    // divergence like 1/ε shows as exponent −1
    assert!(r.exponents.iter().all(|p| (p + 1.0).abs() < 0.05), "{:?}", r.exponents);
}

#[test]
fn hypersingular_value_is_node_independent_on_constants() {
    let eps = EpsSpec::default();
    let ny = NystromSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let first = apply_analytic(KernelName::R, |_| [c(1.0, 0.0), c(0.0, 0.0)], pole(), &eps, &ny)
        .unwrap()
        .value[0];
    for _ in 0..5 {
        let z = random_sphere(&mut rng);
        let v = apply_analytic(KernelName::R, |_| [c(1.0, 0.0), c(0.0, 0.0)], z, &eps, &ny)
            .unwrap()
            .value[0];
        assert!((v - first).norm() < 1e-8);
    }
}

#[test]
fn derived_hypersingular_kernel_vanishes_on_sphere() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..100 {
        let z = random_sphere(&mut rng);
        let w = random_sphere(&mut rng);
        let k = r_kernel_from_double_layer(z, w).unwrap();
        let scale = 1.0 / z.dist_sqr(w).powi(2);
        assert!(k.iter().flatten().all(|x| x.norm() < 1e-10 * scale), "{k:?}");
    }
}

#[test]
fn odd_symmetry_of_single_layer_at_pole() {
    let ny = NystromSpec::default();
    let eps = EpsSpec::default();
    let a = c(0.4, -1.3);
    let v = apply_analytic(KernelName::S, |_| [c(0.0, 0.0), a], pole(), &eps, &ny).unwrap();
    assert!(v.value[0].norm() < 1e-12, "{:?}", v.value);
}

#[test]
fn covariance_expansion_matches_direct_assembly() {
    let grid = BoundaryGrid::new(GridSpec::new(3, 4)).unwrap();
    let ny = NystromSpec { n_alpha: 8, s2_theta: 4, s2_az: 8 };
    let eps = EpsSpec { levels: 5, n_near: 4, n_far: 8, s2_theta: 4, s2_az: 8, ..EpsSpec::default() };
    let ops = KernelName::ALL;
    let a = assemble_operators(&grid, &ops, &ny, &eps).unwrap();
    let b = assemble_operators_direct(&grid, &ops, &ny, &eps).unwrap();
    for (ma, mb) in a.iter().zip(&b) {
        let scale = mb.blocks.iter().flatten().flatten().map(|x| x.norm()).fold(0.0, f64::max);
        for (x, y) in ma.blocks.iter().zip(&mb.blocks) {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((x[i][j] - y[i][j]).norm() < 1e-10 * scale, "{}", ma.name);
                }
            }
        }
    }
}

#[test]
fn zero_density_maps_to_zero() {
    let grid = BoundaryGrid::new(GridSpec::new(3, 4)).unwrap();
    let d = BoundaryField::zeros(grid.len());
    for name in KernelName::ALL {
        let v = apply_operator(name, &d, &grid, pole(), &EpsSpec::default(), &NystromSpec::default()).unwrap();
        assert_eq!(v.value, [c(0.0, 0.0); 2]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn kernels_are_torus_covariant(x in prop::array::uniform4(-1.0f64..1.0), y in prop::array::uniform4(-1.0f64..1.0), al in 0.0f64..6.3, be in 0.0f64..6.3) {
        let z = PointC2::real(x);
        let w = PointC2::real(y);
        prop_assume!(z.norm() > 0.1 && w.norm() > 0.1);
        let (z, w) = (z.normalized(), w.normalized());
        prop_assume!(z.dist_sqr(w) > 1e-2);
        let rot = |p: PointC2| PointC2::new(C64::from_polar(1.0, al) * p.z1, C64::from_polar(1.0, be) * p.z2);
        let e = C64::from_polar(1.0, al + be);
        for name in KernelName::ALL {
            let k = kernel_ball(name, z, w).unwrap();
            let kr = kernel_ball(name, rot(z), rot(w)).unwrap();
            prop_assert!((kr[0][0] - k[0][0]).norm() < 1e-10);
            prop_assert!((kr[1][1] - k[1][1]).norm() < 1e-10);
            prop_assert!((kr[0][1] - k[0][1] * e).norm() < 1e-10);
            prop_assert!((kr[1][0] - k[1][0] * e.conj()).norm() < 1e-10);
        }
    }
}
