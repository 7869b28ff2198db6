use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use super::properties::{self, distance_to_segment};
use super::*;
use crate::domain::make_example;

fn ball2() -> ConvexBody {
    make_example("klein_ball(2)", None).unwrap()
}

fn pt(x: &[f64]) -> ProjPoint {
    ProjPoint::affine(x)
}

/// Hyperbolic distance in the Klein model, through the Lorentzian norm of the difference
/// of hyperboloid lifts: `2 sinh(d / 2) = |A - B|_L`.
fn hyperbolic(a: &[f64], b: &[f64]) -> f64 {
    let lift = |x: &[f64]| {
        let s = (1.0 - x.iter().map(|t| t * t).sum::<f64>()).sqrt();
        let mut v: Vec<f64> = x.iter().map(|t| t / s).collect();
        v.push(1.0 / s);
        v
    };
    let (la, lb) = (lift(a), lift(b));
    let n = a.len();
    let space: f64 = (0..n).map(|i| (la[i] - lb[i]).powi(2)).sum();
    let time = (la[n] - lb[n]).powi(2);
    2.0 * (0.5 * (space - time).max(0.0).sqrt()).asinh()
}

#[test]
fn ball_distance_examples() {
    let body = ball2();
    assert_eq!(hilbert_distance(&body, &pt(&[0.0, 0.0]), &pt(&[0.0, 0.0])).unwrap(), 0.0);
    let d = hilbert_distance(&body, &pt(&[0.0, 0.0]), &pt(&[0.5, 0.0])).unwrap();
    assert_relative_eq!(d, 3f64.ln(), epsilon = 1e-14);
    assert_relative_eq!(d, 2.0 * 0.5f64.atanh(), epsilon = 1e-14);
}

#[test]
fn ball_distance_is_twice_hyperbolic() {
    let body = ball2();
    for (a, b) in [([0.1, 0.2], [-0.7, 0.3]), ([0.9, 0.0], [0.0, -0.95]), ([0.3, 0.3], [0.3000001, 0.3])] {
        let d = hilbert_distance(&body, &pt(&a), &pt(&b)).unwrap();
        assert_relative_eq!(d, 2.0 * hyperbolic(&a, &b), epsilon = 1e-12);
    }
}

#[test]
fn exterior_points_are_rejected() {
    let body = ball2();
    assert!(matches!(
        hilbert_distance(&body, &pt(&[0.0, 0.0]), &pt(&[1.5, 0.0])),
        Err(Error::NotInterior)
    ));
    assert!(hilbert_distance(&body, &pt(&[1.0, 0.0]), &pt(&[0.0, 0.0])).is_err());
}

#[test]
fn simplex_distance_is_invariant_under_diagonal_maps() {
    let body = make_example("hex_simplex", None).unwrap();
    let a = DVector::from_vec(vec![1.0, 2.0, 3.0]);
    let b = DVector::from_vec(vec![3.0, 1.0, 0.5]);
    let g = DVector::from_vec(vec![0.3, 5.0, 1.7]);
    let d0 = distance_coords(&body, &a, &b).unwrap();
    let d1 = distance_coords(&body, &a.component_mul(&g), &b.component_mul(&g)).unwrap();
    assert_relative_eq!(d0, d1, epsilon = 1e-12);
    // On the simplex the distance is the variation norm of log-coordinates.
    let logs: Vec<f64> = (0..3).map(|i| (b[i] / a[i]).ln()).collect();
    let span = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - logs.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_relative_eq!(d0, span, epsilon = 1e-12);
}

#[test]
fn finsler_norm_at_ball_center_is_two() {
    let body = ball2();
    for theta in [0.0, 0.7, 2.0] {
        let v = DVector::from_vec(vec![f64::cos(theta), f64::sin(theta)]);
        assert_relative_eq!(finsler_norm(&body, &pt(&[0.0, 0.0]), &v).unwrap(), 2.0, epsilon = 1e-14);
    }
}

#[test]
fn finsler_matches_chord_formula() {
    // (1/|a - x| + 1/|a - y|) |v| with endpoints from the chord oracle.
    for name in ["klein_ball(2)", "square", "hex_simplex", "paraboloid(2)"] {
        let body = make_example(name, None).unwrap();
        let mut rng = sampling::rng(11);
        for _ in 0..20 {
            let x = body.random_interior(&mut rng, 0.05);
            let a = ProjPoint::new(&x / x[body.dim]).unwrap();
            let v = sampling::unit_vector(&mut rng, body.dim);
            let chord = body.chord(&a, &v).unwrap();
            let aff = a.to_affine().unwrap();
            // Endpoints at infinity of the chart contribute nothing.
            let inverse_dist = |p: &ProjPoint| match p.to_affine() {
                Some(q) if p.coords[body.dim].abs() > 1e-12 * p.coords.norm() => {
                    1.0 / aff.iter().zip(&q).map(|(s, t)| (s - t).powi(2)).sum::<f64>().sqrt()
                }
                _ => 0.0,
            };
            let expected = inverse_dist(&chord.minus) + inverse_dist(&chord.plus);
            let f = finsler_sample(&body, &a, &v).unwrap();
            assert_relative_eq!(f.norm_value, expected, max_relative = 1e-9);
        }
    }
}

#[test]
fn finsler_is_the_derivative_of_distance() {
    let h = 1e-4;
    for name in ["klein_ball(2)", "square", "hex_simplex", "paraboloid(2)"] {
        let body = make_example(name, None).unwrap();
        let mut rng = sampling::rng(5);
        // Unit velocities of the slice chart, where every example is bounded.
        for _ in 0..50 {
            let x = body.random_interior(&mut rng, 0.3);
            let a = ProjPoint::new(x).unwrap();
            let v = body.tangent_basis() * sampling::unit_vector(&mut rng, body.dim);
            let moved = ProjPoint::new(&a.coords + &v * h).unwrap();
            let quotient = hilbert_distance(&body, &a, &moved).unwrap() / h;
            let f = finsler_norm(&body, &a, &v).unwrap();
            assert!((quotient - f).abs() <= 10.0 * h, "{name}: {quotient} vs {f}");
        }
    }
}

#[test]
fn simplex_unit_ball_is_a_hexagon() {
    let body = make_example("hex_simplex", None).unwrap();
    let center = body.witness.clone();
    let tangent = body.tangent_basis();
    // Radius of the unit Finsler ball in each slice direction; vertices are its local maxima.
    let radius: Vec<f64> = (0..360)
        .map(|k| {
            let t = (k as f64).to_radians();
            let d = tangent * DVector::from_vec(vec![t.cos(), t.sin()]);
            1.0 / finsler_slice(&body, &center, &d).unwrap()
        })
        .collect();
    let peaks: Vec<f64> = (0..360)
        .filter(|&k| radius[k] > radius[(k + 359) % 360] && radius[k] >= radius[(k + 1) % 360])
        .map(|k| radius[k])
        .collect();
    assert_eq!(peaks.len(), 6);
    for r in &peaks {
        assert_relative_eq!(*r, peaks[0], max_relative = 1e-9);
    }
}

#[test]
fn ball_of_radius_log3_is_the_half_circle() {
    let body = ball2();
    let sphere = metric_ball(&body, &pt(&[0.0, 0.0]), 3f64.ln(), 64, 1).unwrap();
    for p in sphere {
        let x = p.to_affine().unwrap();
        assert_relative_eq!((x[0] * x[0] + x[1] * x[1]).sqrt(), 0.5, epsilon = 1e-12);
    }
}

#[test]
fn ball_points_are_at_the_radius() {
    for name in ["klein_ball(3)", "square", "hex_simplex", "paraboloid(2)", "pos_cone(2)"] {
        let body = make_example(name, None).unwrap();
        let mut rng = sampling::rng(3);
        let c = body.random_interior(&mut rng, 0.2);
        let center = ProjPoint::new(c).unwrap();
        for r in [0.01, 0.5, 3.0] {
            for p in metric_ball(&body, &center, r, 20, 9).unwrap() {
                assert_relative_eq!(hilbert_distance(&body, &center, &p).unwrap(), r, max_relative = 1e-9);
            }
        }
    }
}

#[test]
fn simplex_balls_have_flat_sides() {
    let body = make_example("hex_simplex", None).unwrap();
    let center = ProjPoint::new(body.witness.clone()).unwrap();
    let r = 1.0;
    let sphere = metric_ball(&body, &center, r, 360, 0).unwrap();
    let mut flat = 0;
    for k in 0..sphere.len() {
        let a = &sphere[k].coords;
        let b = &sphere[(k + 7) % sphere.len()].coords;
        let mid = (a / body.omega.dot(a) + b / body.omega.dot(b)) * 0.5;
        let d = distance_coords(&body, &center.coords, &mid).unwrap();
        assert!(d <= r + 1e-8);
        if (d - r).abs() < 1e-9 {
            flat += 1;
        }
    }
    assert!(flat > 0);
}

#[test]
fn hilbert_ball_area_matches_closed_form() {
    let body = ball2();
    for r in [1.0, 2.0] {
        let region = Region::HilbertBall {
            center: pt(&[0.0, 0.0]),
            radius: r,
        };
        let est = busemann_volume(&body, &region, 40_000, 7).unwrap();
        let exact = 4.0 * std::f64::consts::TAU * ((r / 2.0).cosh() - 1.0);
        assert!((est.estimate - exact).abs() <= 3.0 * est.std_error, "{est:?} vs {exact}");
    }
}

#[test]
fn sampled_density_matches_exact_on_the_ball() {
    let body = ball2();
    let form = match &body.kind {
        BodyKind::Ellipsoid { form } => form.clone(),
        _ => unreachable!(),
    };
    for x in [[0.0, 0.0], [0.5, 0.1], [-0.2, 0.9]] {
        let xl = DVector::from_vec(vec![x[0], x[1], 1.0]);
        let exact = density_ellipsoid(&form, body.tangent_basis(), &xl).unwrap();
        // Hilbert is twice hyperbolic: density is 4 / (1 - |x|^2)^(3/2).
        let r2 = x[0] * x[0] + x[1] * x[1];
        assert_relative_eq!(exact, 4.0 / (1.0 - r2).powf(1.5), max_relative = 1e-12);
        let sampled = busemann_density(&body, &xl, 256).unwrap();
        assert_relative_eq!(sampled, exact, max_relative = 1e-9);
    }
}

#[test]
fn empty_region_has_zero_volume() {
    let est = busemann_volume(&ball2(), &Region::empty(), 1000, 1).unwrap();
    assert_eq!(est.estimate, 0.0);
    assert_eq!(est.std_error, 0.0);
}

#[test]
fn volume_is_invariant_under_body_isometries() {
    // A boost of the Klein disc moves the ball at 0 to a ball at (tanh 0.6, 0).
    let body = ball2();
    let (c, s) = (0.6f64.cosh(), 0.6f64.sinh());
    let boost = DMatrix::from_row_slice(3, 3, &[c, 0.0, s, 0.0, 1.0, 0.0, s, 0.0, c]);
    let inv = boost.clone().try_inverse().unwrap();
    let r = 1.5;
    let centered = Region::HilbertBall {
        center: pt(&[0.0, 0.0]),
        radius: r,
    };
    let body2 = body.clone();
    let moved = Region::Predicate {
        test: std::sync::Arc::new(move |x: &DVector<f64>| {
            distance_coords(&body2, &DVector::from_vec(vec![0.0, 0.0, 1.0]), &(&inv * x)).is_ok_and(|d| d <= r)
        }),
        bounds: None,
    };
    let opts = VolumeOptions {
        exact_ellipsoid_density: false,
        ..VolumeOptions::default()
    };
    let a = busemann_volume_with(&body, &centered, 20_000, 1, &opts).unwrap();
    let b = busemann_volume_with(&body, &moved, 40_000, 2, &opts).unwrap();
    let combined = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.estimate - b.estimate).abs() <= 3.0 * combined, "{a:?} {b:?}");
    assert!(boost.determinant() > 0.0);
}

#[test]
fn segment_distance_vanishes_on_the_segment() {
    let body = make_example("square", None).unwrap();
    let p = DVector::from_vec(vec![-0.5, 0.1, 1.0]);
    let q = DVector::from_vec(vec![0.6, -0.3, 1.0]);
    let mid = (&p + &q) * 0.5;
    assert!(distance_to_segment(&body, &mid, &p, &q).unwrap() < 1e-9);
}

#[test]
fn property_probes_pass_on_examples() {
    for name in ["klein_ball(2)", "hex_simplex", "square", "paraboloid(2)"] {
        let body = make_example(name, None).unwrap();
        for report in properties::run_all(&body, 10, 42).unwrap() {
            assert!(report.passed(), "{name}: {report:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms_on_random_triples(seed in 0u64..10_000, which in 0usize..4) {
        let name = ["klein_ball(2)", "hex_simplex", "square", "paraboloid(2)"][which];
        let body = make_example(name, None).unwrap();
        let mut rng = sampling::rng(seed);
        let x = body.random_interior(&mut rng, 0.01);
        let y = body.random_interior(&mut rng, 0.01);
        let z = body.random_interior(&mut rng, 0.01);
        let dxy = distance_coords(&body, &x, &y).unwrap();
        prop_assert_eq!(dxy, distance_coords(&body, &y, &x).unwrap());
        prop_assert!(dxy >= 0.0);
        prop_assert_eq!(distance_coords(&body, &x, &(&x * 3.0)).unwrap(), 0.0);
        let slack = distance_coords(&body, &x, &z).unwrap() + distance_coords(&body, &z, &y).unwrap() - dxy;
        prop_assert!(slack >= -1e-9);
    }

    #[test]
    fn ball_boosts_are_isometries(seed in 0u64..10_000, t in -2.0f64..2.0, phi in 0.0f64..6.3) {
        let body = ball2();
        let (c, s) = (t.cosh(), t.sinh());
        let rot = DMatrix::from_row_slice(3, 3, &[phi.cos(), -phi.sin(), 0.0, phi.sin(), phi.cos(), 0.0, 0.0, 0.0, 1.0]);
        let boost = DMatrix::from_row_slice(3, 3, &[c, 0.0, s, 0.0, 1.0, 0.0, s, 0.0, c]);
        let g = rot * boost;
        let mut rng = sampling::rng(seed);
        let a = body.random_interior(&mut rng, 0.2);
        let b = body.random_interior(&mut rng, 0.2);
        let d0 = distance_coords(&body, &a, &b).unwrap();
        let d1 = distance_coords(&body, &(&g * &a), &(&g * &b)).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-9);
    }
}
