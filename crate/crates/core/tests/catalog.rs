use dbar_bie::catalog::*;
use dbar_bie::forms::{conormal_b_std, Form01};
use dbar_bie::{PointC2, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sphere(rng: &mut ChaCha8Rng) -> PointC2 {
    PointC2::real(std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).normalized()
}

/// Frame coefficients from standard ones with n = z on the sphere.
fn frame(z: PointC2, s: [C64; 2]) -> [C64; 2] {
    [z.z2 * s[0] - z.z1 * s[1], z.z1.conj() * s[0] + z.z2.conj() * s[1]]
}

fn fd_laplacian(u: &Form01, z: PointC2, h: f64) -> [C64; 2] {
    let x = z.to_real();
    let u0 = u.eval(z);
    let mut acc = [C64::new(0.0, 0.0); 2];
    for k in 0..4 {
        let (mut p, mut m) = (x, x);
        p[k] += h;
        m[k] -= h;
        let (up, um) = (u.eval(PointC2::real(p)), u.eval(PointC2::real(m)));
        for j in 0..2 {
            acc[j] += (up[j] + um[j] - 2.0 * u0[j]) / (h * h);
        }
    }
    acc
}

fn names() -> Vec<String> {
    CATALOG
        .iter()
        .map(|n| n.replace("<k>", "3"))
        .collect()
}

#[test]
fn every_catalog_name_resolves() {
    for n in names() {
        let e = manufactured_field(&n, 5).unwrap();
        assert_eq!(e.name, n);
    }
    assert!(manufactured_field("kmh:10", 5).is_err());
    assert!(manufactured_field("kmh:x", 5).is_err());
}

#[test]
fn datum_is_laplacian_of_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in names() {
        let e = manufactured_field(&n, 5).unwrap();
        let Some(u) = &e.u else { continue };
        for _ in 0..4 {
            let z = sphere(&mut rng).scale(rng.gen_range(0.1..0.9));
            let want = fd_laplacian(u, z, 1e-3);
            let got = e.f.eval(z);
            let scale = 1.0 + want[0].norm().max(want[1].norm());
            assert!((got[0] - want[0]).norm() < 1e-4 * scale && (got[1] - want[1]).norm() < 1e-4 * scale, "{n}");
        }
        if e.harmonic {
            assert!(e.f.eval(PointC2::real([0.1, 0.2, 0.3, 0.1]))[0].norm() < 1e-14);
        }
    }
}

#[test]
fn boundary_condition_fields_satisfy_it() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in names() {
        let e = manufactured_field(&n, 5).unwrap();
        if !e.satisfies_bc {
            continue;
        }
        let u = e.u.as_ref().unwrap();
        for _ in 0..20 {
            let z = sphere(&mut rng);
            assert!(frame(z, u.eval(z))[1].norm() < 1e-12, "{n}");
            assert!(conormal_b_std(u, z).unwrap()[0].norm() < 1e-10, "{n}");
        }
    }
}

#[test]
fn bc_poly_trace_is_its_holomorphic_factor() {
    let e = manufactured_field("bc:poly", 0).unwrap();
    let u = e.u.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let z = sphere(&mut rng);
        let h = C64::new(1.0, 0.0) + C64::new(0.5, 0.2) * z.z1 - 0.3 * z.z2 * z.z2;
        assert!((frame(z, u.eval(z))[0] - h).norm() < 1e-12);
    }
}

#[test]
fn kmh_forms_have_vanishing_normal_component() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..10 {
        let u = kmh_form(k, 9);
        for _ in 0..5 {
            let z = sphere(&mut rng);
            assert!(frame(z, u.eval(z))[1].norm() < 1e-12);
        }
    }
    let a = kmh_form(2, 9).eval(PointC2::real([0.1, 0.2, 0.3, 0.4]));
    let b = kmh_form(2, 9).eval(PointC2::real([0.1, 0.2, 0.3, 0.4]));
    let c = kmh_form(2, 10).eval(PointC2::real([0.1, 0.2, 0.3, 0.4]));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn datum_only_entries_have_no_solution_and_compact_support() {
    let cases = [
        ("bump:offcenter", [0.3, 0.0, 0.0, 0.35], [-0.5, 0.0, 0.0, -0.5]),
        ("bump:radial", [0.5, 0.0, 0.0, 0.0], [0.0, 0.0, 0.85, 0.0]),
    ];
    for (n, inside, outside) in cases {
        let e = manufactured_field(n, 0).unwrap();
        assert!(e.u.is_none() && !e.satisfies_bc);
        assert!(e.f.eval(PointC2::real(inside)).iter().any(|v| v.norm() > 1e-3), "{n}");
        assert!(e.f.eval(PointC2::real(outside)).iter().all(|v| v.norm() == 0.0), "{n}");
    }
}

#[test]
fn random_poly_is_seeded() {
    let p = PointC2::real([0.3, -0.1, 0.2, 0.5]);
    let a = manufactured_field("random:poly", 42).unwrap().f.eval(p);
    let b = manufactured_field("random:poly", 42).unwrap().f.eval(p);
    assert_eq!(a, b);
}
