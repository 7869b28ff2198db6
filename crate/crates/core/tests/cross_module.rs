use hilbert_core::domain::make_example;
use hilbert_core::domain::scene::{body_from_scene, body_to_scene};
use hilbert_core::duality::dual_domain;
use hilbert_core::horocusp::{make_default_chart, translation_group_element};
use hilbert_core::hyperbolicity::{triangle_thinness, StraightTriangle};
use hilbert_core::isometry::{classify, preserves, IsometryKind};
use hilbert_core::metric::distance_coords;
use hilbert_core::projlin::dual_action;
use hilbert_core::{sampling, ProjMap, ProjPoint};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn lorentz(phi: f64, t: f64, psi: f64) -> DMatrix<f64> {
    let rot = |a: f64| {
        let (s, c) = a.sin_cos();
        DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0])
    };
    let (c, s) = (t.cosh(), t.sinh());
    rot(phi) * DMatrix::from_row_slice(3, 3, &[c, 0.0, s, 0.0, 1.0, 0.0, s, 0.0, c]) * rot(psi)
}

#[test]
fn scene_round_trip_keeps_distances() {
    let mut rng = sampling::rng(1);
    for name in ["klein_ball(3)", "hex_simplex", "square", "cone_over_disc", "pos_cone(2)"] {
        let body = make_example(name, None).unwrap();
        let again = body_from_scene(&serde_json::from_str(&body_to_scene(&body).to_string()).unwrap()).unwrap();
        for _ in 0..20 {
            let a = body.random_interior(&mut rng, 0.05);
            let b = body.random_interior(&mut rng, 0.05);
            let d1 = distance_coords(&body, &a, &b).unwrap();
            let d2 = distance_coords(&again, &a, &b).unwrap();
            assert!((d1 - d2).abs() <= 1e-9 * (1.0 + d1), "{name}: {d1} vs {d2}");
        }
    }
}

#[test]
fn dual_action_preserves_the_dual_body() {
    let ball = make_example("klein_ball(2)", None).unwrap();
    let dual = dual_domain(&ball).unwrap();
    let a = ProjMap::new(lorentz(0.3, 0.9, -1.1)).unwrap();
    assert!(preserves(&ball, &a, 64));
    let star = dual_action(&a).unwrap();
    assert!(preserves(&dual.body, &star, 64));
    // Duality reverses nothing about the dynamics: same kind, same translation length.
    let (c, c_star) = (classify(&ball, &a).unwrap(), classify(&dual.body, &star).unwrap());
    assert_eq!(c.kind, c_star.kind);
    assert!((c.translation_length - c_star.translation_length).abs() < 1e-9);
}

#[test]
fn horosphere_heights_and_distances_agree() {
    // Two points on the same vertical line at heights s < t are log(t / s) apart.
    let para = make_example("paraboloid(2)", None).unwrap();
    let p = ProjPoint::from_slice(&[1.0, 0.0, 0.0]).unwrap();
    let chart = make_default_chart(&para, &p, Some(&v(&[0.0, 0.0, 1.0]))).unwrap();
    for u in [-1.5, 0.0, 0.7] {
        let lo = chart.level_point(&v(&[u]), 0.5).unwrap();
        let hi = chart.level_point(&v(&[u]), 4.0).unwrap();
        let d = distance_coords(&para, &lo, &hi).unwrap();
        assert!((d - 8f64.ln()).abs() < 1e-9, "{d}");
    }
    // Parabolics fixing p permute each horosphere.
    let t = translation_group_element(&v(&[1.3]));
    assert_eq!(classify(&para, &t).unwrap().kind, IsometryKind::Parabolic);
    let q = chart.level_point(&v(&[0.2]), 2.0).unwrap();
    assert!((chart.height(&(&t.matrix * &q)).unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn simplex_diagonals_preserve_thinness() {
    let hex = make_example("hex_simplex", None).unwrap();
    let pts = [v(&[0.6, 0.3, 0.1]), v(&[0.1, 0.7, 0.2]), v(&[0.2, 0.2, 0.6])];
    let d = DMatrix::from_diagonal(&v(&[3.0, 0.5, 1.0]));
    let t = StraightTriangle::new(&hex, &pts[0], &pts[1], &pts[2]).unwrap();
    let moved = pts.clone().map(|p| &d * p);
    let image = StraightTriangle::new(&hex, &moved[0], &moved[1], &moved[2]).unwrap();
    let a = triangle_thinness(&hex, &t, 80).unwrap().delta;
    let b = triangle_thinness(&hex, &image, 80).unwrap().delta;
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lorentz_maps_are_hilbert_isometries(
        phi in 0.0f64..6.3, t in -2.0f64..2.0, psi in 0.0f64..6.3,
        x in prop::collection::vec(-0.6f64..0.6, 2), y in prop::collection::vec(-0.6f64..0.6, 2),
    ) {
        let ball = make_example("klein_ball(2)", None).unwrap();
        let g = lorentz(phi, t, psi);
        let (a, b) = (v(&[x[0], x[1], 1.0]), v(&[y[0], y[1], 1.0]));
        let before = distance_coords(&ball, &a, &b).unwrap();
        let after = distance_coords(&ball, &(&g * &a), &(&g * &b)).unwrap();
        prop_assert!((before - after).abs() <= 1e-8 * (1.0 + before));
    }
}
