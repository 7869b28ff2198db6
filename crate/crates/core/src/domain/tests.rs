use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::sampling;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn ball(n: usize) -> ConvexBody {
    make_example("klein_ball", Some(n)).unwrap()
}

fn square() -> ConvexBody {
    make_example("square", None).unwrap()
}

fn hex() -> ConvexBody {
    make_example("hex_simplex", None).unwrap()
}

#[test]
fn contains_examples() {
    let b = ball(2);
    assert_eq!(b.contains(&ProjPoint::affine(&[0.0, 0.0])), Location::Interior);
    assert_eq!(b.contains(&ProjPoint::affine(&[1.0, 0.0])), Location::Boundary);
    assert_eq!(b.contains(&ProjPoint::affine(&[1.0, 0.1])), Location::Exterior);
    // Barycentric coordinates (1.2, 0.1, -0.3).
    let p = ProjPoint::from_slice(&[1.2, 0.1, -0.3]).unwrap();
    assert_eq!(hex().contains(&p), Location::Exterior);
    let q = ProjPoint::from_slice(&[0.5, 0.5, 0.0]).unwrap();
    assert_eq!(hex().contains(&q), Location::Boundary);
}

#[test]
fn projective_points_ignore_sign() {
    let b = ball(2);
    let p = ProjPoint::from_slice(&[-0.1, -0.2, -1.0]).unwrap();
    assert_eq!(b.contains(&p), Location::Interior);
}

#[test]
fn ball_chord_through_center() {
    let b = ball(3);
    let mut rng = sampling::rng(1);
    for _ in 0..20 {
        let d = sampling::unit_vector(&mut rng, 3);
        let c = b.chord(&ProjPoint::affine(&[0.0, 0.0, 0.0]), &d).unwrap();
        let plus = c.plus.to_affine().unwrap();
        let minus = c.minus.to_affine().unwrap();
        for i in 0..3 {
            assert!((plus[i] - d[i]).abs() < 1e-14);
            assert!((minus[i] + d[i]).abs() < 1e-14);
        }
    }
}

#[test]
fn simplex_chord_toward_vertex() {
    let body = hex();
    let a = ProjPoint::from_slice(&[1.0, 1.0, 1.0]).unwrap();
    let c = body.chord(&a, &v(&[2.0, -1.0, -1.0])).unwrap();
    // Barycentric oracle: the plus end is the vertex e1, the minus end the midpoint of the opposite edge.
    let plus = c.plus.coords.clone() / c.plus.coords.sum();
    let minus = c.minus.coords.clone() / c.minus.coords.sum();
    assert!((plus - v(&[1.0, 0.0, 0.0])).amax() < 1e-14);
    assert!((minus - v(&[0.0, 0.5, 0.5])).amax() < 1e-14);
}

fn assert_chords_agree(body: &ConvexBody, trials: usize, seed: u64) {
    let mut rng = sampling::rng(seed);
    for _ in 0..trials {
        let a = ProjPoint::new(body.random_interior(&mut rng, 0.05)).unwrap();
        let d = body.tangent_basis() * sampling::unit_vector(&mut rng, body.dim);
        let exact = body.chord(&a, &d).unwrap();
        let bisect = body.chord_by_bisection(&a, &d).unwrap();
        let scale = exact.s_plus - exact.s_minus;
        assert!((exact.s_plus - bisect.s_plus).abs() <= 1e-10 * scale, "{} vs {}", exact.s_plus, bisect.s_plus);
        assert!((exact.s_minus - bisect.s_minus).abs() <= 1e-10 * scale);
    }
}

#[test]
fn ellipsoid_closed_form_matches_bisection() {
    assert_chords_agree(&ball(2), 100, 2);
    assert_chords_agree(&make_example("paraboloid", Some(3)).unwrap(), 50, 3);
}

#[test]
fn other_kinds_match_bisection() {
    assert_chords_agree(&make_example("pos_cone", Some(3)).unwrap(), 30, 4);
    assert_chords_agree(&make_example("cone_over_disc", None).unwrap(), 30, 5);
    assert_chords_agree(&square(), 30, 6);
}

#[test]
fn vertex_hull_matches_facets() {
    let verts = vec![v(&[1.0, 1.0, 1.0]), v(&[-1.0, 1.0, 1.0]), v(&[-1.0, -1.0, 1.0]), v(&[1.0, -1.0, 1.0])];
    let hull = ConvexBody::polytope_v(verts, None).unwrap();
    let sq = square();
    let mut rng = sampling::rng(9);
    for _ in 0..20 {
        let a = ProjPoint::new(sq.random_interior(&mut rng, 0.05)).unwrap();
        let d = v(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0]);
        let x = hull.chord(&a, &d).unwrap();
        let y = sq.chord(&a, &d).unwrap();
        assert!(x.plus.same_point(&y.plus, 1e-9));
        assert!(x.minus.same_point(&y.minus, 1e-9));
    }
}

#[test]
fn pos_cone_two_is_a_disc() {
    // det of [[a, c/sqrt2], [c/sqrt2, b]] is ab - c^2/2: a Lorentzian form in (a, c, b).
    let form = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, -0.5, 0.0, 0.5, 0.0, -0.5, 0.0, 0.0]);
    let disc = ConvexBody::ellipsoid(form, v(&[1.0, 0.0, 1.0])).unwrap();
    let cone = make_example("pos_cone", Some(2)).unwrap();
    let mut rng = sampling::rng(12);
    for _ in 0..50 {
        let a = ProjPoint::new(cone.random_interior(&mut rng, 0.05)).unwrap();
        let d = sampling::unit_vector(&mut rng, 3);
        let x = cone.chord(&a, &d).unwrap();
        let y = disc.chord(&a, &d).unwrap();
        assert!(x.plus.same_point(&y.plus, 1e-9));
        assert!(x.minus.same_point(&y.minus, 1e-9));
    }
}

#[test]
fn supporting_cone_examples() {
    let b = ball(2);
    let gens = supporting_cone(&b, &ProjPoint::affine(&[1.0, 0.0])).unwrap();
    assert_eq!(gens.len(), 1);
    assert!((gens[0].normalize() - v(&[-1.0, 0.0, 1.0]).normalize()).amax() < 1e-12);

    let gens = supporting_cone(&square(), &ProjPoint::affine(&[1.0, 1.0])).unwrap();
    assert_eq!(gens.len(), 2);
    for want in [v(&[-1.0, 0.0, 1.0]), v(&[0.0, -1.0, 1.0])] {
        assert!(gens.iter().any(|g| (g.normalize() - want.normalize()).amax() < 1e-12));
    }

    let gens = supporting_cone(&hex(), &ProjPoint::from_slice(&[0.0, 0.3, 0.7]).unwrap()).unwrap();
    assert_eq!(gens.len(), 1);
    assert!((gens[0].normalize() - v(&[1.0, 0.0, 0.0])).amax() < 1e-12);

    assert!(matches!(
        supporting_cone(&b, &ProjPoint::affine(&[0.2, 0.0])),
        Err(Error::NotBoundary)
    ));
}

#[test]
fn supporting_covectors_are_nonnegative_on_samples() {
    let mut rng = sampling::rng(21);
    let hull = make_example("sl5_orbit_hull", Some(40)).unwrap();
    for body in [ball(2), square(), hex(), make_example("pos_cone", Some(3)).unwrap(), hull] {
        for _ in 0..5 {
            let u = body.tangent_basis() * sampling::unit_vector(&mut rng, body.dim);
            let p = body.boundary_point(&u).unwrap();
            let gens = body.supporting_covectors(&p, 6, 1).unwrap();
            for phi in &gens {
                assert!(phi.dot(&p).abs() < 1e-7 * phi.norm() * p.norm());
                for _ in 0..20 {
                    let x = body.random_interior(&mut rng, 0.0);
                    assert!(phi.dot(&x) > -1e-9);
                }
            }
        }
    }
}

#[test]
fn boundary_probe_examples() {
    let b = ball(2);
    let probe = boundary_probe(&b, &ProjPoint::affine(&[0.6, 0.8]), 16).unwrap();
    assert_eq!(
        probe,
        BoundaryProbe {
            is_c1: true,
            is_strictly_convex_point: true
        }
    );
    let probe = boundary_probe(&square(), &ProjPoint::affine(&[1.0, 1.0]), 16).unwrap();
    assert!(!probe.is_c1 && probe.is_strictly_convex_point);
    let probe = boundary_probe(&square(), &ProjPoint::affine(&[1.0, 0.0]), 16).unwrap();
    assert!(probe.is_c1 && !probe.is_strictly_convex_point);
}

#[test]
fn directions_at_a_smooth_point_fill_a_halfspace() {
    let b = ball(3);
    let d = space_of_directions(&b, &ProjPoint::affine(&[0.0, 0.6, 0.8])).unwrap();
    assert_eq!(d.dim(), 2);
    assert_eq!(d.halfspace_fill(200, 3), 1.0);
}

fn member_arc(body: &ConvexBody, p: &ProjPoint) -> f64 {
    let sweep = space_of_directions(body, p).unwrap().sweep(720).unwrap();
    sweep.iter().filter(|(_, inside)| *inside).count() as f64 / 720.0 * 360.0
}

#[test]
fn directions_at_vertices_form_intervals() {
    // Square corner: a right angle of directions; simplex corner: 60 degrees
    // in the equilateral slice of the orthant.
    assert!((member_arc(&square(), &ProjPoint::affine(&[1.0, 1.0])) - 90.0).abs() <= 1.0);
    let vertex = ProjPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap();
    assert!((member_arc(&hex(), &vertex) - 60.0).abs() <= 1.0);
    let fill = space_of_directions(&square(), &ProjPoint::affine(&[1.0, 1.0]))
        .unwrap()
        .halfspace_fill(400, 5);
    assert!(fill < 0.9);
}

#[test]
fn benzecri_ball_center_is_identity() {
    let b = ball(2);
    let p = ProjPoint::affine(&[0.0, 0.0]);
    let chart = benzecri_chart(&b, &p, 1.01).unwrap();
    assert!(chart.r_achieved <= 1.0 + 1e-9);
    assert!(chart.map.projective_distance(&crate::projlin::ProjMap::identity(3)) < 1e-6);
}

#[test]
fn benzecri_simplex_barycenter() {
    let body = hex();
    let p = ProjPoint::from_slice(&[1.0, 1.0, 1.0]).unwrap();
    let chart = benzecri_chart(&body, &p, 4.0).unwrap();
    assert!(chart.r_achieved <= 4.0);
    let (lo, hi) = chart.radii(&body, &p, 1500, 77).unwrap();
    assert!(lo >= 1.0 - 1e-3 && hi <= chart.r_achieved * (1.0 + 1e-3), "{lo} {hi}");
}

#[test]
fn benzecri_far_point_in_ball() {
    let b = ball(2);
    let rho = (2.5f64).tanh();
    let p = ProjPoint::affine(&[rho, 0.0]);
    let chart = benzecri_chart(&b, &p, 1.05).unwrap();
    let image = chart.map.apply(&p).to_affine().unwrap();
    assert!(image.iter().all(|x| x.abs() < 1e-9));
    let (lo, hi) = chart.radii(&b, &p, 2000, 1).unwrap();
    assert!(lo >= 1.0 - 1e-6 && hi <= chart.r_achieved + 1e-6, "{lo} {hi}");
}

#[test]
fn benzecri_reports_unmet_target() {
    let body = square();
    match benzecri_chart(&body, &ProjPoint::affine(&[0.9, 0.9]), 1.0001) {
        Err(Error::TargetNotMet { achieved, best, .. }) => {
            assert!(achieved > 1.0001);
            assert_eq!(best.r_achieved, achieved);
        }
        other => panic!("expected TargetNotMet, got {other:?}"),
    }
}

#[test]
fn make_example_catalogue() {
    let b = ball(2);
    assert!(matches!(b.kind, BodyKind::Ellipsoid { .. }));
    assert!((b.witness.clone() - v(&[0.0, 0.0, 1.0])).amax() < 1e-15);
    let hull = make_example("sl5_orbit_hull", Some(200)).unwrap();
    assert_eq!(hull.dim, 4);
    if let BodyKind::PolytopeV { vertices, .. } = &hull.kind {
        assert!(vertices.iter().all(|x| hull.omega.dot(x) > 0.0));
    }
    assert!(hull.is_interior(&hull.witness));
    assert!(matches!(make_example("torus", None), Err(Error::UnknownExample(_))));
    assert_eq!(make_example("klein_ball(3)", None).unwrap().dim, 3);
}

fn catalogue() -> Vec<ConvexBody> {
    vec![
        ball(2),
        ball(3),
        hex(),
        square(),
        make_example("paraboloid", Some(2)).unwrap(),
        make_example("pos_cone", Some(3)).unwrap(),
        make_example("cone_over_disc", None).unwrap(),
        make_example("simplex", Some(3)).unwrap(),
    ]
}

#[test]
fn every_example_has_interior_witness_and_positive_omega() {
    let mut rng = sampling::rng(31);
    for body in catalogue() {
        assert_eq!(body.locate(&body.witness), Location::Interior, "{}", body.name);
        for _ in 0..50 {
            let u = body.tangent_basis() * sampling::unit_vector(&mut rng, body.dim);
            let p = body.boundary_point(&u).unwrap();
            assert!(body.omega.dot(&p) > 0.0);
            assert_eq!(body.locate_with_tol(&p, 1e-8), Location::Boundary, "{}", body.name);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chord_endpoints_straddle_the_point(which in 0usize..8, seed in any::<u64>()) {
        let body = &catalogue()[which];
        let mut rng = sampling::rng(seed);
        let a = ProjPoint::new(body.random_interior(&mut rng, 0.02)).unwrap();
        let d = sampling::unit_vector(&mut rng, body.size());
        if let Ok(c) = body.chord(&a, &d) {
            prop_assert!(c.s_minus < 0.0 && c.s_plus > 0.0);
            prop_assert_eq!(body.locate_with_tol(&c.plus.coords, 1e-8), Location::Boundary);
            prop_assert_eq!(body.locate_with_tol(&c.minus.coords, 1e-8), Location::Boundary);
            let mid = &c.base + &c.direction * (0.5 * (c.s_minus + c.s_plus));
            prop_assert_eq!(body.locate(&mid), Location::Interior);
        }
    }
}
