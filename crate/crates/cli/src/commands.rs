use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use hilbert_core::duality::{characteristic_function, dual_domain};
use hilbert_core::groups::{enumerate_ball, slice_grid, thin_part_csv, thin_part_sample};
use hilbert_core::horocusp::{self, ellipsoid_characterization_demo, make_default_chart};
use hilbert_core::hyperbolicity::{self, StraightTriangle};
use hilbert_core::isometry::{classify_with, IsometryOptions};
use hilbert_core::metric::{busemann_volume_with, distance_coords, metric_ball, Region, VolumeOptions};
use hilbert_core::{domain::scene::body_to_scene, ProjPoint};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use crate::input::{load_group, load_matrix, load_point, load_scene, load_triangle, usage};
use crate::{Command, DemoName};

/// Everything a run depends on; echoed into every JSON result.
#[derive(Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub seed: u64,
    pub samples: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub out: Option<String>,
    pub params: Value,
}

pub struct Outcome {
    pub result: Value,
    pub csv: Option<String>,
}

impl Outcome {
    fn json(result: Value) -> Self {
        Self { result, csv: None }
    }
}

/// Default tolerances per command; `--tol.<name>` may only override these.
pub fn default_tolerances(command: &Command) -> BTreeMap<String, f64> {
    let pairs: &[(&str, f64)] = match command {
        Command::Classify { .. } => &[("modulus_band", 1e-7), ("fixed", 1e-9)],
        Command::Thinness { .. } => &[("nudge", hyperbolicity::DEFAULT_NUDGE)],
        Command::Busemann { .. } => &[("convergence", 1e-6)],
        Command::Demo { .. } => &[("paraboloid", 1e-12), ("sphere", 1e-9)],
        _ => &[],
    };
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn name(command: &Command) -> &'static str {
    match command {
        Command::Distance { .. } => "distance",
        Command::Classify { .. } => "classify",
        Command::Ball { .. } => "ball",
        Command::Horosphere { .. } => "horosphere",
        Command::Busemann { .. } => "busemann",
        Command::Dual { .. } => "dual",
        Command::Charfun { .. } => "charfun",
        Command::Volume { .. } => "volume",
        Command::Thinness { .. } => "thinness",
        Command::Petsearch { .. } => "petsearch",
        Command::Thinpart { .. } => "thinpart",
        Command::Demo { .. } => "demo",
    }
}

/// Sample budget used when `--samples` is absent.
pub fn default_samples(command: &Command) -> Option<usize> {
    match command {
        Command::Classify { .. } => Some(IsometryOptions::default().samples),
        Command::Ball { .. } => Some(256),
        Command::Horosphere { .. } => Some(21),
        Command::Charfun { .. } | Command::Volume { .. } => Some(100_000),
        Command::Thinness { .. } => Some(hyperbolicity::DEFAULT_SIDE_SAMPLES),
        Command::Thinpart { .. } => Some(21),
        _ => None,
    }
}

fn csv_rows(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",") + "\n";
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:.12e}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn coord_header(size: usize) -> Vec<String> {
    (0..size).map(|i| format!("x{i}")).collect()
}

fn vec_json(v: &DVector<f64>) -> Value {
    json!(v.as_slice())
}

/// Point cloud in the JSON result, or in the CSV when `--out` is given.
fn cloud(points: &[DVector<f64>], size: usize, to_csv: bool) -> (Value, Option<String>) {
    if to_csv {
        let csv = csv_rows(&coord_header(size), points.iter().map(|p| p.as_slice().to_vec()));
        (Value::Null, Some(csv))
    } else {
        (json!(points.iter().map(|p| p.as_slice().to_vec()).collect::<Vec<_>>()), None)
    }
}

pub fn run(command: &Command, cfg: &RunConfig) -> Result<Outcome> {
    let samples = cfg.samples.unwrap_or(0);
    let tol = |name: &str| cfg.tolerances[name];
    let to_csv = cfg.out.is_some();
    match command {
        Command::Distance { scene, from, to } => {
            let body = load_scene(scene)?;
            let a = load_point(&body, from, "--from")?;
            let b = load_point(&body, to, "--to")?;
            Ok(Outcome::json(json!({ "distance": distance_coords(&body, &a, &b)? })))
        }
        Command::Classify { scene, matrix } => {
            let body = load_scene(scene)?;
            let a = load_matrix(matrix)?;
            let opts = IsometryOptions {
                modulus_band: tol("modulus_band"),
                fixed_tol: tol("fixed"),
                samples,
            };
            let c = classify_with(&body, &a, &opts)?;
            Ok(Outcome::json(json!({
                "kind": c.kind,
                "t": c.translation_length,
                "fixed_sets": c.fixed_sets,
                "axis": c.axis,
                "certificate": c.certificate,
            })))
        }
        Command::Ball { scene, center, radius } => {
            let body = load_scene(scene)?;
            let c = ProjPoint::new(load_point(&body, center, "--center")?)?;
            let pts: Vec<DVector<f64>> = metric_ball(&body, &c, *radius, samples, cfg.seed)?
                .into_iter()
                .map(|p| p.coords)
                .collect();
            let mut residual = 0.0f64;
            for p in &pts {
                residual = residual.max((distance_coords(&body, &c.coords, p)? - radius).abs());
            }
            let (points, csv) = cloud(&pts, body.size(), to_csv);
            Ok(Outcome {
                result: json!({ "count": pts.len(), "radius_residual": residual, "points": points }),
                csv,
            })
        }
        Command::Horosphere { scene, point, covector, level, width, query } => {
            let body = load_scene(scene)?;
            let p = ProjPoint::new(load_point(&body, point, "--point")?)?;
            let h = covector.as_deref().map(|c| load_point(&body, c, "--covector")).transpose()?;
            let chart = make_default_chart(&body, &p, h.as_ref())?;
            let per_axis = samples.max(2);
            let m = body.dim - 1;
            let mut pts = Vec::new();
            let mut skipped = 0;
            let total = per_axis.checked_pow(m as u32).ok_or_else(|| usage("horosphere grid is too large"))?;
            for flat in 0..total {
                let mut rest = flat;
                let u = DVector::from_fn(m, |_, _| {
                    let k = rest % per_axis;
                    rest /= per_axis;
                    -width + 2.0 * width * k as f64 / (per_axis - 1) as f64
                });
                match chart.level_point(&u, *level) {
                    Ok(x) => pts.push(body.lift(&x).unwrap_or(x)),
                    Err(_) => skipped += 1,
                }
            }
            let height = match query {
                Some(q) => Some(chart.height(&load_point(&body, q, "--query")?)?),
                None => None,
            };
            let (points, csv) = cloud(&pts, body.size(), to_csv);
            Ok(Outcome {
                result: json!({
                    "chart": { "p": vec_json(&chart.p), "h": vec_json(&chart.h), "r": vec_json(&chart.r) },
                    "level": level,
                    "count": pts.len(),
                    "skipped": skipped,
                    "query_height": height,
                    "points": points,
                }),
                csv,
            })
        }
        Command::Busemann { scene, point, query, t_max } => {
            let body = load_scene(scene)?;
            let p = ProjPoint::new(load_point(&body, point, "--point")?)?;
            let q = ProjPoint::new(load_point(&body, query, "--query")?)?;
            let est = horocusp::busemann(&body, &p, &q, *t_max)?;
            if !est.converged && est.gap > tol("convergence") {
                eprintln!("warning: Busemann limit not converged (last gap {:e})", est.gap);
            }
            Ok(Outcome::json(json!({ "busemann": est })))
        }
        Command::Dual { scene } => {
            let body = load_scene(scene)?;
            let dual = dual_domain(&body)?;
            let mut out = body_to_scene(&dual.body);
            out["dual_of"] = json!(dual.dual_of);
            Ok(Outcome::json(json!({ "dual": out })))
        }
        Command::Charfun { scene, at } => {
            let body = load_scene(scene)?;
            let x = load_point(&body, at, "--at")?;
            Ok(Outcome::json(json!({ "charfun": characteristic_function(&body, &x, samples, cfg.seed)? })))
        }
        Command::Volume { scene, center, radius, directions } => {
            let body = load_scene(scene)?;
            let c = ProjPoint::new(load_point(&body, center, "--center")?)?;
            let region = Region::HilbertBall { center: c, radius: *radius };
            let opts = VolumeOptions {
                directions: *directions,
                ..VolumeOptions::default()
            };
            let est = busemann_volume_with(&body, &region, samples, cfg.seed, &opts)?;
            Ok(Outcome::json(json!({ "volume": est })))
        }
        Command::Thinness { scene, triangle, incenter } => {
            let body = load_scene(scene)?;
            let [a, b, c] = load_triangle(&body, triangle)?;
            let t = StraightTriangle::new(&body, &a, &b, &c)?;
            let report = hyperbolicity::triangle_thinness_with(&body, &t, samples, tol("nudge"))?;
            let pet = hyperbolicity::pet_check(&body, &t)?;
            let centre = if *incenter {
                Some(hyperbolicity::incenter(&body, &t, samples, cfg.seed)?)
            } else {
                None
            };
            Ok(Outcome::json(json!({ "thinness": report, "pet": pet, "incenter": centre })))
        }
        Command::Petsearch { scene, delta, budget } => {
            let body = load_scene(scene)?;
            let found = hyperbolicity::fat_triangle_search(&body, *delta, *budget, cfg.seed)?;
            let pet = match &found.witness {
                Some(w) => Some(hyperbolicity::pet_check(&body, &w.triangle)?),
                None => None,
            };
            Ok(Outcome::json(json!({
                "found": found.witness.is_some(),
                "witness": found.witness.as_ref().map(|w| json!({
                    "points": w.triangle.vertices.iter().map(|v| v.as_slice().to_vec()).collect::<Vec<_>>(),
                    "delta": w.delta,
                    "pet": pet,
                })),
                "best_delta": found.best_delta,
                "evaluations": found.evaluations,
            })))
        }
        Command::Thinpart { scene, group, length, eps, margin } => {
            let body = load_scene(scene)?;
            let generators = load_group(group)?;
            let ball = enumerate_ball(&generators, *length)?;
            let grid = slice_grid(&body, samples, *margin)?;
            let pts = thin_part_sample(&body, &ball, *eps, &grid)?;
            let thin = pts.iter().filter(|p| p.thin).count();
            let min_inj = pts.iter().map(|p| p.inj_estimate).fold(f64::INFINITY, f64::min);
            let csv = thin_part_csv(&pts);
            let rows = if to_csv { Value::Null } else { json!(pts) };
            Ok(Outcome {
                result: json!({
                    "ball_size": ball.len(),
                    "count": pts.len(),
                    "thin_count": thin,
                    "min_inj_estimate": min_inj,
                    "points": rows,
                }),
                csv: to_csv.then_some(csv),
            })
        }
        Command::Demo { name, n, extent } => match name {
            DemoName::EllipsoidCharacterization => {
                if *n == 0 || *n > 6 {
                    bail!(usage("demo needs 1 <= n <= 6"));
                }
                let grid = integer_grid(*n, *extent);
                let report = ellipsoid_characterization_demo(*n, &grid).context("running the demo")?;
                let on_paraboloid = report.paraboloid_residual <= tol("paraboloid");
                let on_sphere = report.sphere_residual <= tol("sphere");
                Ok(Outcome::json(json!({
                    "all_orbit_points_on_paraboloid": on_paraboloid,
                    "all_ball_images_on_sphere": on_sphere,
                    "report": report,
                })))
            }
        },
    }
}

/// All of `{-extent, ..., extent}^n`.
fn integer_grid(n: usize, extent: u32) -> Vec<DVector<f64>> {
    let side = 2 * extent as usize + 1;
    (0..side.pow(n as u32))
        .map(|flat| {
            let mut rest = flat;
            DVector::from_fn(n, |_, _| {
                let k = rest % side;
                rest /= side;
                k as f64 - extent as f64
            })
        })
        .collect()
}
