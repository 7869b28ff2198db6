//! Named example domains.

use nalgebra::{DMatrix, DVector};

use super::{BodyKind, ConvexBody};
use crate::error::{Error, Result};
use crate::projlin::ProjMap;

/// Optional integer parameter of an example (dimension, matrix size or sample count).
pub type ExampleParams = Option<usize>;

/// Builds a named example. `name` may carry its parameter inline, as in `klein_ball(3)`.
///
/// Names: `klein_ball(n)`, `hex_simplex`, `simplex(n)`, `square`, `cone_over_disc`,
/// `pos_cone(m)`, `sl5_orbit_hull(samples)`, `paraboloid(n)`.
pub fn make_example(name: &str, param: ExampleParams) -> Result<ConvexBody> {
    let (base, inline) = split_name(name)?;
    let param = inline.or(param);
    let body = match base {
        "klein_ball" => klein_ball(param.unwrap_or(2))?,
        "hex_simplex" => ConvexBody::simplex(2)?,
        "simplex" => ConvexBody::simplex(param.unwrap_or(2))?,
        "square" => square()?,
        "cone_over_disc" => ConvexBody::cone_join(klein_ball(2)?)?,
        "pos_cone" => ConvexBody::pos_cone(param.unwrap_or(2))?,
        "sl5_orbit_hull" => sl5_orbit_hull(param.unwrap_or(200))?,
        "paraboloid" => paraboloid(param.unwrap_or(2))?,
        _ => return Err(Error::UnknownExample(name.to_string())),
    };
    let label = match (base, param) {
        ("hex_simplex" | "square" | "cone_over_disc", _) | (_, None) => base.to_string(),
        (_, Some(p)) => format!("{base}({p})"),
    };
    Ok(body.with_name(&label))
}

fn split_name(name: &str) -> Result<(&str, Option<usize>)> {
    let name = name.trim();
    match name.find('(') {
        None => Ok((name, None)),
        Some(open) => {
            let inner = name[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::UnknownExample(name.to_string()))?;
            let value = inner
                .trim()
                .parse()
                .map_err(|_| Error::UnknownExample(name.to_string()))?;
            Ok((&name[..open], Some(value)))
        }
    }
}

fn klein_ball(n: usize) -> Result<ConvexBody> {
    if n == 0 {
        return Err(Error::InvalidInput("klein_ball needs n >= 1".into()));
    }
    let mut diag = vec![1.0; n + 1];
    diag[n] = -1.0;
    let form = DMatrix::from_diagonal(&DVector::from_vec(diag));
    let mut witness = DVector::zeros(n + 1);
    witness[n] = 1.0;
    ConvexBody::ellipsoid(form, witness)
}

/// `{x_1 > |x'|^2 / 2}` in the standard chart, with `x_1` the vertical (first) coordinate.
fn paraboloid(n: usize) -> Result<ConvexBody> {
    if n == 0 {
        return Err(Error::InvalidInput("paraboloid needs n >= 1".into()));
    }
    let size = n + 1;
    let mut form = DMatrix::identity(size, size);
    form[(0, 0)] = 0.0;
    form[(n, n)] = 0.0;
    form[(0, n)] = -1.0;
    form[(n, 0)] = -1.0;
    let mut witness = DVector::zeros(size);
    witness[0] = 1.0;
    witness[n] = 1.0;
    ConvexBody::ellipsoid(form, witness)
}

/// `[-1, 1]^2`.
fn square() -> Result<ConvexBody> {
    let f = |a: f64, b: f64| DVector::from_vec(vec![a, b, 1.0]);
    ConvexBody::polytope_h(
        vec![f(-1.0, 0.0), f(1.0, 0.0), f(0.0, -1.0), f(0.0, 1.0)],
        Some(DVector::from_vec(vec![0.0, 0.0, 1.0])),
    )
}

/// Convex hull of `[t^4/24 : t^3/6 : t^2/2 : t : 1]` sampled at `t = tan(theta)`, with its limit point `e_1`.
fn sl5_orbit_hull(samples: usize) -> Result<ConvexBody> {
    if samples < 6 {
        return Err(Error::InvalidInput("sl5_orbit_hull needs at least 6 samples".into()));
    }
    let mut vertices = vec![DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0])];
    let half_pi = std::f64::consts::FRAC_PI_2;
    for j in 0..samples - 1 {
        let theta = -half_pi + std::f64::consts::PI * (j as f64 + 0.5) / (samples - 1) as f64;
        let (s, c) = theta.sin_cos();
        vertices.push(DVector::from_vec(vec![
            s.powi(4) / 24.0,
            s.powi(3) * c / 6.0,
            s * s * c * c / 2.0,
            s * c.powi(3),
            c.powi(4),
        ]));
    }
    // Facets make chords linear-algebraic; enumeration is skipped for dense samples.
    let hull = ConvexBody::polytope_v(vertices, None)?;
    let BodyKind::PolytopeV { vertices, .. } = &hull.kind else {
        unreachable!("polytope_v builds a V-polytope")
    };
    match crate::duality::polytope_vertices(vertices, &hull.witness) {
        Some(facets) => ConvexBody::polytope_v(vertices.clone(), Some(facets)),
        None => Ok(hull),
    }
}

/// Symmetric matrix with coordinates `v` in the orthonormal basis `E_ii`, `(E_ij + E_ji)/sqrt 2`.
pub fn pos_cone_matrix(m: usize, v: &DVector<f64>) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(m, m);
    let mut k = 0;
    for i in 0..m {
        for j in i..m {
            if i == j {
                s[(i, i)] = v[k];
            } else {
                let x = v[k] / std::f64::consts::SQRT_2;
                s[(i, j)] = x;
                s[(j, i)] = x;
            }
            k += 1;
        }
    }
    s
}

pub fn pos_cone_vector(s: &DMatrix<f64>) -> DVector<f64> {
    let m = s.nrows();
    let mut v = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in i..m {
            if i == j {
                v.push(s[(i, i)]);
            } else {
                v.push(std::f64::consts::SQRT_2 * 0.5 * (s[(i, j)] + s[(j, i)]));
            }
        }
    }
    DVector::from_vec(v)
}

/// The map `S -> A S A^T` on `Sym(m)`, which preserves the positive-definite cone.
pub fn pos_cone_action(a: &DMatrix<f64>) -> Result<ProjMap> {
    let m = a.nrows();
    let size = m * (m + 1) / 2;
    let mut out = DMatrix::zeros(size, size);
    for k in 0..size {
        let mut e = DVector::zeros(size);
        e[k] = 1.0;
        let image = a * pos_cone_matrix(m, &e) * a.transpose();
        out.set_column(k, &pos_cone_vector(&image));
    }
    ProjMap::new(out)
}
