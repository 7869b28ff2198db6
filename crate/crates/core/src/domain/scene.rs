//! Scene JSON: `{"dim": n, "kind": "...", "params": {...}, "witness": [...]}`.

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use super::{make_example, BodyKind, ConvexBody};
use crate::error::{Error, Result};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub fn vector_from_json(v: &Value) -> Result<DVector<f64>> {
    let arr = v.as_array().ok_or_else(|| invalid("expected an array of numbers"))?;
    let xs: Option<Vec<f64>> = arr.iter().map(Value::as_f64).collect();
    xs.map(DVector::from_vec).ok_or_else(|| invalid("expected an array of numbers"))
}

/// Row-major array of arrays.
pub fn matrix_from_json(v: &Value) -> Result<DMatrix<f64>> {
    let rows = v.as_array().ok_or_else(|| invalid("expected an array of rows"))?;
    let rows: Vec<DVector<f64>> = rows.iter().map(vector_from_json).collect::<Result<_>>()?;
    let ncols = rows.first().map(|r| r.len()).ok_or_else(|| invalid("empty matrix"))?;
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(invalid("ragged matrix"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_json(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array(m.row(i).iter().map(|x| json!(x)).collect()))
            .collect(),
    )
}

pub fn vector_to_json(v: &DVector<f64>) -> Value {
    Value::Array(v.iter().map(|x| json!(x)).collect())
}

fn vectors(v: Option<&Value>, what: &str) -> Result<Vec<DVector<f64>>> {
    let arr = v
        .and_then(Value::as_array)
        .ok_or_else(|| invalid(format!("params.{what} must be an array of arrays")))?;
    arr.iter().map(vector_from_json).collect()
}

fn param_usize(params: &Value, key: &str) -> Option<usize> {
    params.get(key).and_then(Value::as_u64).map(|x| x as usize)
}

/// Parses a scene. `kind` may also be the name of a built-in example.
pub fn body_from_scene(scene: &Value) -> Result<ConvexBody> {
    let kind = scene
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| invalid("scene needs a string field \"kind\""))?;
    let params = scene.get("params").cloned().unwrap_or_else(|| json!({}));
    let dim = scene.get("dim").and_then(Value::as_u64).map(|d| d as usize);
    let witness = match scene.get("witness") {
        Some(w) if !w.is_null() => Some(vector_from_json(w)?),
        _ => None,
    };
    let witness = match (witness, dim) {
        (Some(w), Some(n)) if w.len() == n => Some(w.insert_row(n, 1.0)),
        (w, _) => w,
    };
    let body = match kind {
        "ellipsoid" => {
            let form = matrix_from_json(params.get("form").ok_or_else(|| invalid("params.form missing"))?)?;
            let size = form.nrows();
            let w = witness.clone().unwrap_or_else(|| {
                let mut e = DVector::zeros(size);
                e[size - 1] = 1.0;
                e
            });
            ConvexBody::ellipsoid(form, w)?
        }
        "polytope_h" => ConvexBody::polytope_h(vectors(params.get("facets"), "facets")?, witness.clone())?,
        "polytope_v" => {
            let facets = match params.get("facets") {
                Some(f) => Some(vectors(Some(f), "facets")?),
                None => None,
            };
            ConvexBody::polytope_v(vectors(params.get("vertices"), "vertices")?, facets)?
        }
        "simplex" => ConvexBody::simplex(dim.ok_or_else(|| invalid("simplex scene needs dim"))?)?,
        "pos_cone" => ConvexBody::pos_cone(param_usize(&params, "m").unwrap_or(2))?,
        "cone_join" => ConvexBody::cone_join(body_from_scene(
            params.get("base").ok_or_else(|| invalid("params.base missing"))?,
        )?)?,
        name => {
            let p = param_usize(&params, "n")
                .or_else(|| param_usize(&params, "m"))
                .or_else(|| param_usize(&params, "samples"))
                .or(match name {
                    "klein_ball" | "paraboloid" | "simplex" => dim,
                    _ => None,
                });
            make_example(name, p)?
        }
    };
    if let Some(n) = dim {
        if n != body.dim {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: body.dim,
            });
        }
    }
    match witness {
        Some(w) if !matches!(body.kind, BodyKind::Ellipsoid { .. } | BodyKind::PolytopeH { .. }) => {
            if w.len() != body.size() || !body.is_interior(&w) {
                return Err(invalid("scene witness is not an interior point"));
            }
            ConvexBody::from_parts(body.kind, w, body.omega, &body.name)
        }
        _ => Ok(body),
    }
}

/// Scene JSON of a body, using primitive kinds.
pub fn body_to_scene(body: &ConvexBody) -> Value {
    let list = |vs: &[DVector<f64>]| Value::Array(vs.iter().map(vector_to_json).collect());
    let (kind, params) = match &body.kind {
        BodyKind::Ellipsoid { form } => ("ellipsoid", json!({ "form": matrix_to_json(form) })),
        BodyKind::PolytopeH { facets } => ("polytope_h", json!({ "facets": list(facets) })),
        BodyKind::PolytopeV { vertices, facets } => {
            let mut p = json!({ "vertices": list(vertices) });
            if let Some(f) = facets {
                p["facets"] = list(f);
            }
            ("polytope_v", p)
        }
        BodyKind::Simplex => ("simplex", json!({})),
        BodyKind::ConeJoin { base } => ("cone_join", json!({ "base": body_to_scene(base) })),
        BodyKind::PosCone { m } => ("pos_cone", json!({ "m": m })),
        BodyKind::Sublevel(data) => (
            "vinberg_sublevel",
            json!({
                "base": body_to_scene(&data.base),
                "hyperplane": vector_to_json(&data.hyperplane),
                "level": data.level,
                "quadrature": data.charfun.node_count(),
            }),
        ),
    };
    json!({
        "dim": body.dim,
        "kind": kind,
        "name": body.name,
        "params": params,
        "witness": vector_to_json(&body.witness),
    })
}
