//! Parsing of scenes, points, matrices and groups given as files or inline JSON.

use std::path::Path;

use anyhow::{bail, Context, Result};
use hilbert_core::domain::{make_example, scene::body_from_scene};
use hilbert_core::groups::GroupSpec;
use hilbert_core::{ConvexBody, ProjMap};
use nalgebra::DVector;
use serde_json::Value;

/// Malformed command-line input. Maps to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Usage(pub String);

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Inline JSON if the argument looks like JSON, otherwise the contents of a file.
pub fn load_json(arg: &str) -> Result<Value> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        trimmed.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| usage(format!("cannot read `{arg}`: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid JSON in `{arg}`: {e}")))
}

/// A scene file, inline scene JSON, or the name of a built-in example.
pub fn load_scene(arg: &str) -> Result<ConvexBody> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || Path::new(arg).is_file() {
        let scene = load_json(arg)?;
        return body_from_scene(&scene).context("building the scene");
    }
    make_example(arg, None).context("building the example")
}

fn numbers(value: &Value, what: &str) -> Result<Vec<f64>> {
    let Some(items) = value.as_array() else {
        bail!(usage(format!("{what} must be a JSON array of numbers")));
    };
    items
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| usage(format!("{what} has a non-numeric entry"))))
        .collect()
}

/// Homogeneous coordinates from `n` affine coordinates (chart `x_{n+1} = 1`) or `n + 1` homogeneous ones.
pub fn point_from_value(body: &ConvexBody, value: &Value, what: &str) -> Result<DVector<f64>> {
    let mut x = numbers(value, what)?;
    if x.len() == body.dim {
        x.push(1.0);
    }
    if x.len() != body.size() {
        bail!(usage(format!(
            "{what} needs {} affine or {} homogeneous coordinates, got {}",
            body.dim,
            body.size(),
            x.len()
        )));
    }
    Ok(DVector::from_vec(x))
}

pub fn load_point(body: &ConvexBody, arg: &str, what: &str) -> Result<DVector<f64>> {
    point_from_value(body, &load_json(arg)?, what)
}

/// A matrix as a list of rows, bare or under a `"matrix"` key.
pub fn load_matrix(arg: &str) -> Result<ProjMap> {
    let value = load_json(arg)?;
    let rows = value.get("matrix").unwrap_or(&value);
    let rows: Vec<Vec<f64>> =
        serde_json::from_value(rows.clone()).map_err(|e| usage(format!("matrix must be a list of rows: {e}")))?;
    ProjMap::from_rows(&rows).context("reading the matrix")
}

pub fn load_group(arg: &str) -> Result<Vec<ProjMap>> {
    let spec: GroupSpec =
        serde_json::from_value(load_json(arg)?).map_err(|e| usage(format!("group JSON needs \"generators\": {e}")))?;
    if spec.generators.is_empty() {
        bail!(usage("group needs at least one generator"));
    }
    spec.maps().context("reading the generators")
}

/// Three points, each affine or homogeneous.
pub fn load_triangle(body: &ConvexBody, arg: &str) -> Result<[DVector<f64>; 3]> {
    let value = load_json(arg)?;
    let items = value.as_array().filter(|a| a.len() == 3).ok_or_else(|| usage("triangle must be a list of three points"))?;
    Ok([
        point_from_value(body, &items[0], "vertex 0")?,
        point_from_value(body, &items[1], "vertex 1")?,
        point_from_value(body, &items[2], "vertex 2")?,
    ])
}

/// Rewrites `--tol.<name> <value>` and `--tol.<name>=<value>` as `--tol <name>=<value>`.
pub fn expand_tolerance_flags(args: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        match arg.strip_prefix("--tol.") {
            Some(rest) if rest.contains('=') => {
                out.push("--tol".into());
                out.push(rest.to_string());
            }
            Some(rest) => {
                out.push("--tol".into());
                out.push(format!("{rest}={}", it.next().unwrap_or_default()));
            }
            None => out.push(arg),
        }
    }
    out
}
