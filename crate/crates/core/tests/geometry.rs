use dbar_bie::geometry::*;
use dbar_bie::{Error, PointC2, C64};
use proptest::prelude::*;

const PI: f64 = std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn unit(x: [f64; 4]) -> PointC2 {
    PointC2::real(x).normalized()
}

#[test]
fn grid_spec_validation() {
    assert!(GridSpec::new(7, 12).validate().is_ok());
    for bad in [GridSpec::new(4, 12), GridSpec::new(1, 12), GridSpec::new(7, 5), GridSpec::new(7, 2)] {
        assert!(matches!(BoundaryGrid::new(bad), Err(Error::Config(_))));
    }
}

#[test]
fn grid_integrates_moments_of_the_sphere() {
    // |S³| = 2π², ∫|z₁|² = π², ∫|z₁|⁴ = 2π²/3
    let mut last = f64::INFINITY;
    for n in [7, 9, 11] {
        let g = BoundaryGrid::new(GridSpec::new(n, 12)).unwrap();
        assert_eq!(g.len(), n * 12 * 12);
        let area = g.integrate(|_| c(1.0, 0.0));
        assert!((area.re - 2.0 * PI * PI).abs() < 1e-10);
        let m2 = g.integrate(|z| c(z.z1.norm_sqr(), 0.0));
        assert!((m2.re - PI * PI).abs() < 1e-10);
        let odd = g.integrate(|z| z.z1 * z.z2.conj());
        assert!(odd.norm() < 1e-10);
        let m4 = (g.integrate(|z| c(z.z1.norm_sqr().powi(2), 0.0)).re - 2.0 * PI * PI / 3.0).abs();
        assert!(m4 < last.max(1e-12));
        last = m4;
    }
    assert!(last < 1e-11);
}

#[test]
fn grid_nodes_lie_on_sphere_and_pole_is_a_node() {
    let g = BoundaryGrid::new(GridSpec::new(5, 10)).unwrap();
    assert!(g.nodes.iter().all(|p| (p.norm() - 1.0).abs() < 1e-14));
    let p = g.nodes[g.pole_index()];
    assert!(p.dist_sqr(PointC2::new(c(1.0, 0.0), c(0.0, 0.0))) < 1e-28);
    assert!(g.symmetric);
}

#[test]
fn grid_coordinates_round_trip() {
    let z = unit([0.3, -0.5, 0.7, 0.1]);
    let back = from_grid_coords(to_grid_coords(z));
    assert!(back.dist_sqr(z) < 1e-28);
}

#[test]
fn interpolation_converges_on_smooth_data() {
    let f = |z: PointC2| [z.z1 * z.z2, z.z1.conj() + z.z2 * z.z2];
    let pts: Vec<PointC2> = [[0.2, 0.4, -0.1, 0.3], [-0.6, 0.1, 0.5, 0.2], [0.0, 0.0, 0.3, -0.9]]
        .into_iter()
        .map(unit)
        .collect();
    let mut errs = Vec::new();
    for n in [7, 9, 11] {
        let g = BoundaryGrid::new(GridSpec::new(n, 12)).unwrap();
        let vals: Vec<[C64; 2]> = g.nodes.iter().map(|&z| f(z)).collect();
        let e = pts
            .iter()
            .map(|&z| {
                let (got, want) = (g.interpolate(&vals, z), f(z));
                (got[0] - want[0]).norm().max((got[1] - want[1]).norm())
            })
            .fold(0.0, f64::max);
        errs.push(e);
    }
    assert!(errs[0] < 1e-4 && errs[1] < errs[0] && errs[2] < errs[1] && errs[2] < 1e-8, "{errs:?}");
}

#[test]
fn ball_frame_at_pole() {
    let f = frame_at(PointC2::new(c(1.0, 0.0), c(0.0, 0.0))).unwrap();
    assert_eq!(f.n, [c(1.0, 0.0), c(0.0, 0.0)]);
    assert_eq!(f.l, [c(0.0, 0.0), c(-1.0, 0.0)]);
    assert!(matches!(frame_at(PointC2::new(c(0.0, 0.0), c(0.0, 0.0))), Err(Error::Origin)));
    assert!((signed_distance(PointC2::real([0.0, 0.0, 0.6, 0.0])) + 0.4).abs() < 1e-15);
}

#[test]
fn finite_difference_geometry_matches_ball() {
    let fd = FdGeometry::new(|z: PointC2| z.norm() - 1.0);
    for x in [[0.3, 0.2, -0.4, 0.5], [0.9, 0.0, 0.1, -0.2]] {
        let z = PointC2::real(x);
        let a = fd.frame(z).unwrap();
        let b = Ball.frame(z).unwrap();
        for k in 0..2 {
            assert!((a.l[k] - b.l[k]).norm() < 1e-8);
            assert!((a.n[k] - b.n[k]).norm() < 1e-8);
        }
        assert!((fd.grad_norm(z).unwrap() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn pairing_names_parse() {
    assert!(matches!(Pairing::parse("N.(z-w)"), Ok(Pairing::NDisp)));
    assert!(matches!(Pairing::parse("perp.L"), Ok(Pairing::PerpL)));
    assert!(matches!(Pairing::parse("N.M"), Err(Error::Unknown { .. })));
}

#[test]
fn field_pairings_at_a_point() {
    let z = unit([0.1, 0.7, -0.3, 0.2]);
    let nn = pairing(&Ball, Pairing::NN, z, z).unwrap();
    let ll = pairing(&Ball, Pairing::LL, z, z).unwrap();
    let nl = pairing(&Ball, Pairing::NL, z, z).unwrap();
    assert!((nn - c(0.5, 0.0)).norm() < 1e-14);
    assert!((ll - c(0.5, 0.0)).norm() < 1e-14);
    assert!(nl.norm() < 1e-14);
    assert!(pairing(&Ball, Pairing::NDisp, z, z).unwrap().norm() < 1e-14);
}

proptest! {
    #[test]
    fn frame_matrix_is_unitary(x in prop::array::uniform4(-1.0f64..1.0)) {
        let z = PointC2::real(x);
        prop_assume!(z.norm() > 1e-3);
        let m = frame_matrix(z).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let s = m[i][0] * m[j][0].conj() + m[i][1] * m[j][1].conj();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((s - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn tangent_basis_is_orthonormal_and_tangent(x in prop::array::uniform4(-1.0f64..1.0)) {
        let z = PointC2::real(x);
        prop_assume!(z.norm() > 1e-3);
        let z = z.normalized();
        let t = tangent_basis(z);
        for i in 0..3 {
            prop_assert!(t[i].rdot(z).abs() < 1e-12);
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((t[i].rdot(t[j]) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chordal_distance_identity(x in prop::array::uniform4(-1.0f64..1.0), y in prop::array::uniform4(-1.0f64..1.0)) {
        let (z, w) = (PointC2::real(x), PointC2::real(y));
        prop_assume!(z.norm() > 1e-3 && w.norm() > 1e-3);
        let (z, w) = (z.normalized(), w.normalized());
        prop_assert!((z.dist_sqr(w) - (2.0 - 2.0 * z.hdot(w).re)).abs() < 1e-12);
    }
}
