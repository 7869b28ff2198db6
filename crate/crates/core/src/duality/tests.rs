use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::domain::{make_example, Location};
use crate::isometry::preserves;
use crate::projlin::{dual_action, ProjMap};

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn affine(x: &DVector<f64>) -> DVector<f64> {
    let k = x.len() - 1;
    x.rows(0, k) / x[k]
}

#[test]
fn klein_ball_is_self_dual() {
    let ball = make_example("klein_ball(2)", None).unwrap();
    let dual = dual_domain(&ball).unwrap();
    assert_eq!(dual.dual_of, "klein_ball(2)");
    let mut rng = sampling::rng(1);
    for _ in 0..200 {
        let x = sampling::gaussian_vector(&mut rng, 2) * 0.7;
        let p = v(&[x[0], x[1], 1.0]);
        assert_eq!(ball.locate(&p), dual.body.locate(&p));
    }
    assert!(dual.positivity_margin(&ball, 500, 2) > 0.0);
}

#[test]
fn square_dual_is_diamond() {
    let square = make_example("square", None).unwrap();
    let dual = dual_domain(&square).unwrap();
    let BodyKind::PolytopeV { vertices, facets } = &dual.body.kind else {
        panic!("expected a vertex polytope");
    };
    let mut corners: Vec<(i64, i64)> = vertices
        .iter()
        .map(affine)
        .map(|a| ((a[0] * 1e6).round() as i64, (a[1] * 1e6).round() as i64))
        .collect();
    corners.sort();
    assert_eq!(corners, vec![(-1_000_000, 0), (0, -1_000_000), (0, 1_000_000), (1_000_000, 0)]);
    // The square's corners come back as the diamond's facets.
    assert_eq!(facets.as_ref().map(|f| f.len()), Some(4));
    assert!(dual.positivity_margin(&square, 500, 3) > 0.0);

    let double = dual_domain(&dual.body).unwrap();
    let BodyKind::PolytopeH { facets: back } = &double.body.kind else {
        panic!("expected a facet polytope");
    };
    let BodyKind::PolytopeH { facets: original } = &square.kind else {
        unreachable!()
    };
    for f in original {
        assert!(back.iter().any(|g| (g - f).amax() < 1e-10));
    }
    let mut rng = sampling::rng(4);
    for _ in 0..200 {
        let x = sampling::gaussian_vector(&mut rng, 2);
        let p = v(&[x[0], x[1], 1.0]);
        assert_eq!(square.locate(&p), double.body.locate(&p));
    }
}

#[test]
fn polytope_vertex_enumeration() {
    let square = make_example("square", None).unwrap();
    let BodyKind::PolytopeH { facets } = &square.kind else {
        unreachable!()
    };
    let verts = polytope_vertices(facets, &square.omega).unwrap();
    assert_eq!(verts.len(), 4);
    for p in verts {
        let a = affine(&p);
        assert_relative_eq!(a[0].abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(a[1].abs(), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn dual_is_equivariant() {
    let ball = make_example("klein_ball(2)", None).unwrap();
    let dual = dual_domain(&ball).unwrap();
    let hex = make_example("hex_simplex", None).unwrap();
    let hex_dual = dual_domain(&hex).unwrap();
    let mut rng = sampling::rng(8);
    for k in 0..20 {
        let t = 0.1 * k as f64 - 1.0;
        let (c, s) = (t.cosh(), t.sinh());
        let boost = ProjMap::new(DMatrix::from_row_slice(3, 3, &[c, 0.0, s, 0.0, 1.0, 0.0, s, 0.0, c])).unwrap();
        let diag = ProjMap::new(DMatrix::from_diagonal(&v(&[1.0 + k as f64, 1.0, 0.5]))).unwrap();
        for (body, dual, a) in [(&ball, &dual, boost), (&hex, &hex_dual, diag)] {
            assert!(preserves(body, &a, 0));
            let star = dual_action(&a).unwrap();
            let psi = dual.body.random_interior(&mut rng, 0.01);
            assert_eq!(dual.body.locate(&(&star.matrix * psi)), Location::Interior);
        }
    }
}

#[test]
fn orthant_characteristic_function() {
    let orthant = ConvexBody::simplex(2).unwrap();
    for (x, exact) in [(v(&[1.0, 1.0, 1.0]), 1.0), (v(&[2.0, 1.0, 1.0]), 0.5)] {
        let est = characteristic_function(&orthant, &x, 200_000, 11).unwrap();
        assert_eq!(est.closed_form, Some(exact));
        assert!((est.estimate - exact).abs() <= 4.0 * est.std_error, "{est:?}");
        assert!(est.std_error < 0.02 * exact);
    }
    assert!(matches!(
        characteristic_function(&orthant, &v(&[1.0, -1.0, 1.0]), 10, 0),
        Err(Error::NotInCone)
    ));
    assert!(matches!(
        characteristic_function(&orthant, &v(&[-1.0, -1.0, -1.0]), 10, 0),
        Err(Error::NotInCone)
    ));
}

#[test]
fn lorentz_characteristic_function() {
    // Round cone x_2 > |(x_0, x_1)|: f(x) = 2! * pi * (x_2^2 - x_0^2 - x_1^2)^{-3/2}.
    let ball = make_example("klein_ball(2)", None).unwrap();
    let x = v(&[0.3, -0.2, 1.0]);
    let exact = 2.0 * std::f64::consts::PI * (1.0f64 - 0.09 - 0.04).powf(-1.5);
    let est = characteristic_function(&ball, &x, 200_000, 12).unwrap();
    assert_relative_eq!(est.closed_form.unwrap(), exact, epsilon = 1e-12);
    assert!((est.estimate - exact).abs() <= 4.0 * est.std_error, "{est:?} vs {exact}");
    // The join of the disc has f(x, w) = f_disc(x) / w.
    let cone = make_example("cone_over_disc", None).unwrap();
    let y = v(&[0.3, -0.2, 1.0, 0.5]);
    let est = characteristic_function(&cone, &y, 200_000, 13).unwrap();
    assert_relative_eq!(est.closed_form.unwrap(), exact / 0.5, epsilon = 1e-12);
    assert!((est.estimate - exact / 0.5).abs() <= 4.0 * est.std_error, "{est:?}");
}

#[test]
fn quadrature_tracks_closed_form() {
    let ball = make_example("klein_ball(2)", None).unwrap();
    let quad = CharacteristicFunction::quadrature(&ball, 20_000, 5).unwrap();
    let exact = closed_form(&ball).unwrap();
    for x in [v(&[0.0, 0.0, 1.0]), v(&[0.5, 0.1, 1.0])] {
        assert_relative_eq!(quad.eval(&x), exact.eval(&x), max_relative = 0.03);
    }
    assert_eq!(quad.node_count(), Some(20_000));
}

#[test]
fn polyhedral_charfun_is_exact() {
    // Dual slice of the square at height c is the diamond of area 2c^2, so
    // f(e_2) = int 2c^2 e^{-c} dc = 4.
    let square = make_example("square", None).unwrap();
    let f = closed_form(&square).unwrap();
    assert!(matches!(&f, CharacteristicFunction::Polyhedral { cells, .. } if cells.len() == 2));
    assert_relative_eq!(f.eval(&v(&[0.0, 0.0, 1.0])), 4.0, epsilon = 1e-12);
    let quad = CharacteristicFunction::quadrature(&square, 20_000, 5).unwrap();
    for x in [v(&[0.3, -0.2, 1.0]), v(&[0.8, 0.7, 1.0])] {
        assert_relative_eq!(quad.eval(&x), f.eval(&x), max_relative = 0.03);
    }
    assert_eq!(f.eval(&v(&[1.0, 0.0, 1.0])), f64::INFINITY);

    let facets: Vec<_> = (0..3).map(|i| DVector::from_fn(3, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
    let tri = ConvexBody::polytope_h(facets, None).unwrap();
    let f = closed_form(&tri).unwrap();
    let x = v(&[0.2, 0.5, 1.3]);
    assert_relative_eq!(f.eval(&x), CharacteristicFunction::Orthant.eval(&x), max_relative = 1e-12);
}

#[test]
fn polyhedral_duality_point_is_log_gradient() {
    let hull = make_example("sl5_orbit_hull(24)", None).unwrap();
    let f = closed_form(&hull).unwrap();
    let x = hull.witness.clone();
    let phi = f.duality_point(&x).unwrap();
    for i in 0..x.len() {
        let mut e = DVector::zeros(x.len());
        e[i] = 1e-6 * x.norm();
        let numeric = -(f.eval(&(&x + &e)).ln() - f.eval(&(&x - &e)).ln()) / (2.0 * e[i]);
        assert_relative_eq!(phi[i], numeric, max_relative = 1e-5, epsilon = 1e-6);
    }
    assert_relative_eq!(phi.dot(&x), 5.0, epsilon = 1e-9);
}

#[test]
fn characteristic_function_is_homogeneous() {
    let pos = make_example("pos_cone(2)", None).unwrap();
    let mut rng = sampling::rng(6);
    for _ in 0..20 {
        let x = pos.random_interior(&mut rng, 0.1);
        let a = characteristic_function(&pos, &x, 4000, 9).unwrap();
        let b = characteristic_function(&pos, &(&x * 2.0), 4000, 9).unwrap();
        // Degree -N with N = 3.
        let combined = (a.std_error.powi(2) + (8.0 * b.std_error).powi(2)).sqrt();
        assert!((8.0 * b.estimate - a.estimate).abs() <= 3.0 * combined + 1e-12 * a.estimate);
    }
}

#[test]
fn characteristic_function_decreases_inward() {
    let f = CharacteristicFunction::new(&make_example("hex_simplex", None).unwrap(), 2048, 1).unwrap();
    let mut rng = sampling::rng(7);
    for _ in 0..20 {
        let x = DVector::from_fn(3, |_, _| rng.gen_range(0.1..2.0));
        let y = DVector::from_fn(3, |_, _| rng.gen_range(0.1..2.0));
        let values: Vec<f64> = (0..10).map(|k| f.eval(&(&x + &y * (0.3 * k as f64)))).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]));
    }
    let square = make_example("square", None).unwrap();
    let f = CharacteristicFunction::quadrature(&square, 2048, 1).unwrap();
    assert!(!f.is_exact());
    let values: Vec<f64> = (0..10).map(|k| f.eval(&v(&[0.2, 0.1, 1.0 + 0.2 * k as f64]))).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn vinberg_points() {
    let orthant = ConvexBody::simplex(2).unwrap();
    let ones = v(&[1.0, 1.0, 1.0]);
    assert_relative_eq!(vinberg_point(&orthant, &ones, 1.0).unwrap(), ones, epsilon = 1e-12);
    let s = 2f64.powf(-1.0 / 3.0);
    assert_relative_eq!(vinberg_point(&orthant, &ones, 2.0).unwrap(), &ones * s, epsilon = 1e-12);
    assert!(matches!(vinberg_point(&orthant, &v(&[1.0, 0.0, 1.0]), 1.0), Err(Error::NotInCone)));
    // Distinct rays land on distinct points of S_1, all at level 1.
    let f = CharacteristicFunction::Orthant;
    let mut rng = sampling::rng(10);
    let points: Vec<DVector<f64>> = (0..50)
        .map(|_| {
            let x = DVector::from_fn(3, |_, _| rng.gen_range(0.1..3.0));
            vinberg_point_with(&f, &orthant, &x, 1.0).unwrap()
        })
        .collect();
    for (i, p) in points.iter().enumerate() {
        assert_relative_eq!(f.eval(p), 1.0, epsilon = 1e-12);
        for q in &points[i + 1..] {
            assert!((p - q).norm() > 1e-9);
        }
    }
}

#[test]
fn ball_shrink_is_a_round_disc() {
    let ball = make_example("klein_ball(2)", None).unwrap();
    // f = 2 pi (1 - |u|^2)^{-3/2} on the slice, so {f <= 20} is the disc of radius sqrt(1 - (pi/10)^{2/3}).
    let shrink = vinberg_shrink(&ball, 20.0, None, 0).unwrap();
    let radius = (1.0 - (std::f64::consts::PI / 10.0).powf(2.0 / 3.0)).sqrt();
    for k in 0..12 {
        let phi = 0.5 * k as f64;
        let u = v(&[phi.cos(), phi.sin(), 0.0]);
        let b = shrink.boundary_point(&u).unwrap();
        assert_relative_eq!((b[0] * b[0] + b[1] * b[1]).sqrt() / b[2], radius, epsilon = 1e-9);
    }
    let mut rng = sampling::rng(11);
    for _ in 0..500 {
        let x = shrink.random_interior(&mut rng, 0.0);
        assert!(ball.is_interior(&x));
    }
    assert!(flat_segment_probe(&shrink, 50, 12, 0.1, None).unwrap().passed());
    assert!(matches!(vinberg_shrink(&ball, 6.0, None, 0), Err(Error::EmptySlice)));
}

#[test]
fn shrinks_grow_with_the_level() {
    let ball = make_example("klein_ball(2)", None).unwrap();
    let small = vinberg_shrink(&ball, 10.0, None, 0).unwrap();
    let large = vinberg_shrink(&ball, 40.0, None, 0).unwrap();
    let mut rng = sampling::rng(13);
    for _ in 0..200 {
        let x = small.random_interior(&mut rng, 0.0);
        assert!(large.is_interior(&x));
    }
}

#[test]
fn horospherical_shrink_keeps_the_cusp() {
    // Tangent hyperplane at the top of the disc; a parabolic fixing it preserves the shrink.
    let ball = make_example("klein_ball(2)", None).unwrap();
    let h = v(&[0.0, -1.0, 1.0]);
    let shrink = vinberg_shrink(&ball, 30.0, Some(&h), 0).unwrap();
    let top = v(&[0.0, 1.0, 1.0]);
    // Points approaching the top along the axis eventually enter the shrink.
    assert!(shrink.is_interior(&v(&[0.0, 0.999, 1.0])));
    let parabolic = ProjMap::from_rows(&[
        vec![1.0, -0.5, 0.5],
        vec![0.5, 0.875, 0.125],
        vec![0.5, -0.125, 1.125],
    ])
    .unwrap();
    assert!(preserves(&ball, &parabolic, 0));
    assert!((&parabolic.matrix * &top - &top).amax() < 1e-12);
    let mut rng = sampling::rng(14);
    for _ in 0..200 {
        let x = shrink.random_interior(&mut rng, 0.02);
        assert!(shrink.is_interior(&(&parabolic.matrix * &x)));
    }
}

#[test]
fn orbit_hull_shrink_is_strictly_convex() {
    let hull = make_example("sl5_orbit_hull(24)", None).unwrap();
    let h = v(&[0.0, 0.0, 0.0, 0.0, 1.0]);
    let f = CharacteristicFunction::new(&hull, 2048, 0x71).unwrap();
    let start = &hull.witness / h.dot(&hull.witness);
    let shrink = vinberg_shrink(&hull, 1.5 * f.eval(&start), Some(&h), 2048).unwrap();
    assert!(flat_segment_probe(&hull, 40, 15, 0.02, None).unwrap().failures > 0);
    let report = flat_segment_probe(&shrink, 200, 15, 0.15, Some((&h, 0.05))).unwrap();
    assert!(report.passed(), "{report:?}");
    assert!(report.trials - report.skipped >= 50, "{report:?}");
}

#[test]
fn duality_map_examples() {
    let ball = make_example("klein_ball(2)", None).unwrap();
    let center = duality_map(&ball, &v(&[0.0, 0.0, 1.0]), 50_000, 16).unwrap();
    assert_relative_eq!(center.closed_form.clone().unwrap(), v(&[0.0, 0.0, 3.0]), epsilon = 1e-12);
    assert!((&center.point - v(&[0.0, 0.0, 3.0])).amax() <= 4.0 * center.std_error + 1e-12);
    let orthant = ConvexBody::simplex(2).unwrap();
    // With omega = 1 the representative of (1,1,1) is (1,1,1)/sqrt 3.
    let x = v(&[1.0, 1.0, 1.0]);
    let xl = orthant.lift(&x).unwrap();
    let est = duality_map(&orthant, &x, 100_000, 17).unwrap();
    let expected = xl.map(|c| 1.0 / c);
    assert_relative_eq!(est.closed_form.clone().unwrap(), expected, epsilon = 1e-12);
    assert!((&est.point - &expected).amax() <= 4.0 * est.std_error, "{est:?}");
    assert_relative_eq!(est.point.dot(&xl), 3.0, epsilon = 1e-9);
    let dual = dual_domain(&orthant).unwrap();
    assert!(dual.body.is_interior(&est.point));
    assert!(matches!(duality_map(&orthant, &v(&[1.0, 0.0, 1.0]), 10, 0), Err(Error::NotInterior)));
}

#[test]
fn duality_map_ratios_on_square() {
    let square = make_example("square", None).unwrap();
    let report = duality_bilipschitz(&square, 100, 4000, 18).unwrap();
    assert!(report.k_emp.is_finite() && report.k_emp >= 1.0, "{report:?}");
    assert!(report.min_ratio > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn orthant_closed_form_homogeneity(x in prop::collection::vec(0.05f64..5.0, 4), t in 0.1f64..10.0) {
        let f = CharacteristicFunction::Orthant;
        let x = DVector::from_vec(x);
        prop_assert!((f.eval(&(&x * t)) * t.powi(4) / f.eval(&x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lorentz_duality_point_has_level_n(a in -0.9f64..0.9, b in -0.4f64..0.4) {
        let ball = make_example("klein_ball(2)", None).unwrap();
        let f = closed_form(&ball).unwrap();
        let x = DVector::from_vec(vec![a, b, 1.0]);
        let phi = f.duality_point(&x).unwrap();
        prop_assert!((phi.dot(&x) - 3.0).abs() < 1e-10);
        prop_assert!(dual_domain(&ball).unwrap().body.is_interior(&phi));
    }
}
