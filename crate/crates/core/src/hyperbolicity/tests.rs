use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::*;
use crate::domain::make_example;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn klein() -> ConvexBody {
    make_example("klein_ball(2)", None).unwrap()
}

fn disc_point(r: f64, angle: f64) -> DVector<f64> {
    v(&[r * angle.cos(), r * angle.sin(), 1.0])
}

fn near_ideal(body: &ConvexBody, inset: f64) -> StraightTriangle {
    let third = 2.0 * std::f64::consts::PI / 3.0;
    let [a, b, c] = [0.0, third, 2.0 * third].map(|t| disc_point(1.0 - inset, t));
    StraightTriangle::new(body, &a, &b, &c).unwrap()
}

/// Thinness of the ideal triangle with vertices -1, 1, inf in the upper half plane.
///
/// A point `e^{i theta}` of the bottom side sits at hyperbolic distance
/// `asinh(|cos theta -+ 1| / sin theta)` from the vertical sides; by symmetry
/// of the ideal triangle the bottom side realizes the thinness.
fn ideal_thinness_oracle() -> f64 {
    let mut best = 0.0f64;
    for i in 1..100_000 {
        let theta = std::f64::consts::PI * i as f64 / 100_000.0;
        let (s, c) = theta.sin_cos();
        let d = ((1.0 - c).abs() / s).asinh().min(((1.0 + c).abs() / s).asinh());
        best = best.max(d);
    }
    best
}

#[test]
fn near_ideal_triangle_matches_hyperbolic_oracle() {
    let body = klein();
    let report = triangle_thinness(&body, &near_ideal(&body, 1e-6), DEFAULT_SIDE_SAMPLES).unwrap();
    let oracle = 2.0 * ideal_thinness_oracle();
    assert!((report.delta - oracle).abs() < 5e-2, "{} vs {oracle}", report.delta);
    assert_eq!(report.nudged, [false; 3]);
}

#[test]
fn tiny_triangle_is_thin() {
    let body = klein();
    let h = 3e-4;
    let t = StraightTriangle::new(&body, &v(&[0.1, 0.0, 1.0]), &v(&[0.1 + h, 0.0, 1.0]), &v(&[0.1, h, 1.0])).unwrap();
    let [a, b, c] = &t.vertices;
    let diameter = [(a, b), (b, c), (c, a)]
        .iter()
        .map(|(p, q)| distance_coords(&body, p, q).unwrap())
        .fold(0.0, f64::max);
    assert!(diameter <= 1e-3);
    let report = triangle_thinness(&body, &t, 50).unwrap();
    assert!(report.delta <= diameter, "{} vs {diameter}", report.delta);
    let centre = incenter(&body, &t, 30, 1).unwrap();
    assert!(centre.inradius <= diameter);
}

#[test]
fn simplex_corners_make_fat_triangles() {
    let body = make_example("hex_simplex", None).unwrap();
    let mut last = 0.0;
    for eps in [1e-2, 1e-4, 1e-6] {
        let corner = |i: usize| {
            let mut x = DVector::from_element(3, eps);
            x[i] = 1.0 - 2.0 * eps;
            x
        };
        let t = StraightTriangle::new(&body, &corner(0), &corner(1), &corner(2)).unwrap();
        let delta = triangle_thinness(&body, &t, 100).unwrap().delta;
        assert!(delta > last);
        last = delta;
    }
    assert!(last > 5.0, "{last}");
}

#[test]
fn degenerate_and_exterior_triangles_are_rejected() {
    let body = klein();
    let (a, b) = (v(&[0.0, 0.0, 1.0]), v(&[0.5, 0.0, 1.0]));
    assert!(matches!(StraightTriangle::new(&body, &a, &b, &v(&[-0.3, 0.0, 1.0])), Err(Error::DegenerateTriangle)));
    assert!(matches!(StraightTriangle::new(&body, &a, &b, &v(&[0.0, 2.0, 1.0])), Err(Error::NotInterior)));
    assert!(matches!(StraightTriangle::new(&body, &a, &b, &v(&[0.0, 0.0])), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn simplex_faces_are_properly_embedded() {
    let body = make_example("simplex(2)", None).unwrap();
    let t = StraightTriangle::new(&body, &v(&[1.0, 0.0, 0.0]), &v(&[0.0, 1.0, 0.0]), &v(&[0.0, 0.0, 1.0])).unwrap();
    assert!(pet_check(&body, &t).unwrap());

    let body = make_example("simplex(3)", None).unwrap();
    let t = StraightTriangle::new(
        &body,
        &v(&[1.0, 0.0, 0.0, 0.0]),
        &v(&[0.0, 1.0, 0.0, 0.0]),
        &v(&[0.0, 0.0, 1.0, 1.0]),
    )
    .unwrap();
    assert!(pet_check(&body, &t).unwrap());
    // A face of the tetrahedron's boundary has its interior on the boundary too.
    let face = StraightTriangle::new(
        &body,
        &v(&[1.0, 0.0, 0.0, 0.0]),
        &v(&[0.0, 1.0, 0.0, 0.0]),
        &v(&[0.0, 0.0, 1.0, 0.0]),
    )
    .unwrap();
    assert!(!pet_check(&body, &face).unwrap());
}

#[test]
fn round_disc_has_no_pet() {
    let body = klein();
    let third = 2.0 * std::f64::consts::PI / 3.0;
    let [a, b, c] = [0.0, third, 2.0 * third].map(|t| disc_point(1.0, t));
    let t = StraightTriangle::new(&body, &a, &b, &c).unwrap();
    assert!(!pet_check(&body, &t).unwrap());
    assert_eq!(t.nudged(&body, 1e-3).1, [true; 3]);
}

#[test]
fn nudged_pet_grows_fat() {
    let body = make_example("simplex(2)", None).unwrap();
    let t = StraightTriangle::new(&body, &v(&[1.0, 0.0, 0.0]), &v(&[0.0, 1.0, 0.0]), &v(&[0.0, 0.0, 1.0])).unwrap();
    let deltas: Vec<f64> = [1e-2, 1e-4, 1e-6, 1e-8]
        .iter()
        .map(|&eps| triangle_thinness_with(&body, &t, 60, eps).unwrap().delta)
        .collect();
    assert!(deltas.windows(2).all(|w| w[1] > w[0] + 1.0), "{deltas:?}");
}

#[test]
fn thinness_is_projectively_invariant() {
    let body = klein();
    let (c, s) = (0.8f64.cosh(), 0.8f64.sinh());
    let boost = DMatrix::from_row_slice(3, 3, &[c, 0.0, s, 0.0, 1.0, 0.0, s, 0.0, c]);
    let pts = [v(&[0.3, 0.1, 1.0]), v(&[-0.5, 0.4, 1.0]), v(&[0.1, -0.7, 1.0])];
    let t = StraightTriangle::new(&body, &pts[0], &pts[1], &pts[2]).unwrap();
    let moved = pts.clone().map(|p| &boost * p);
    let image = StraightTriangle::new(&body, &moved[0], &moved[1], &moved[2]).unwrap();
    let before = triangle_thinness(&body, &t, 120).unwrap();
    let after = triangle_thinness(&body, &image, 120).unwrap();
    assert!((before.delta - after.delta).abs() < 1e-6, "{} vs {}", before.delta, after.delta);
}

#[test]
fn symmetric_incenter_is_the_centre() {
    let body = klein();
    let centre = incenter(&body, &near_ideal(&body, 1e-3), 40, 3).unwrap();
    assert!((&centre.point - v(&[0.0, 0.0, 1.0])).norm() < 1e-3, "{}", centre.point);
}

#[test]
fn inradius_bounds_fatness() {
    let body = klein();
    let mut rng = sampling::rng(11);
    for k in 0..20 {
        let pts: Vec<DVector<f64>> = (0..3).map(|_| body.random_interior(&mut rng, 0.02)).collect();
        let Ok(t) = StraightTriangle::new(&body, &pts[0], &pts[1], &pts[2]) else {
            continue;
        };
        let delta = triangle_thinness(&body, &t, 40).unwrap();
        let centre = incenter(&body, &t, 40, k).unwrap();
        assert!(
            centre.inradius >= delta.delta / 2.0 - delta.resolution - 1e-6,
            "inradius {} delta {}",
            centre.inradius,
            delta.delta
        );
    }
}

#[test]
fn search_finds_fat_triangles_in_the_simplex_only() {
    let simplex = make_example("hex_simplex", None).unwrap();
    let found = fat_triangle_search(&simplex, 3.0, 200, 5).unwrap();
    let witness = found.witness.expect("simplex is not hyperbolic");
    assert!(witness.delta >= 3.0);

    let ball = klein();
    let none = fat_triangle_search(&ball, 3.0, 60, 5).unwrap();
    assert!(none.witness.is_none());
    assert!(none.best_delta < 2.0 * ideal_thinness_oracle() + 5e-2, "{}", none.best_delta);
}

#[test]
fn search_refutes_hyperbolicity_of_the_orbit_hull() {
    let hull = make_example("sl5_orbit_hull(24)", None).unwrap();
    let found = fat_triangle_search(&hull, 3.0, 200, 2).unwrap();
    assert!(found.witness.is_some(), "best {}", found.best_delta);
}

#[test]
fn random_boundary_triangles_stay_inside() {
    let body = klein();
    let mut rng = sampling::rng(4);
    for _ in 0..10 {
        let pts: Vec<DVector<f64>> = (0..3).map(|_| disc_point(1.0, rng.gen_range(0.0..6.28))).collect();
        if let Ok(t) = StraightTriangle::new(&body, &pts[0], &pts[1], &pts[2]) {
            let (n, _) = t.nudged(&body, 1e-4);
            assert!(n.vertices.iter().all(|x| body.is_interior(x)));
        }
    }
}
