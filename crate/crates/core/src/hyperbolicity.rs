//! Straight triangles: thinness, incenters, properly embedded triangles and a
//! randomized search for fat triangles.
//!
//! Sides are sampled uniformly in Hilbert arclength and the extremal samples
//! are polished by golden-section search, so the reported resolution is half
//! the arclength spacing.

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::domain::{ConvexBody, Location};
use crate::error::{Error, Result};
use crate::metric::{ball_point, distance_coords};
use crate::{linalg, sampling};

pub const DEFAULT_SIDE_SAMPLES: usize = 200;
pub const DEFAULT_NUDGE: f64 = 1e-6;
const GOLDEN_STEPS: usize = 60;

/// Three projectively independent points of the closure of a body.
#[derive(Clone, Debug, Serialize)]
pub struct StraightTriangle {
    /// Lifts with `omega = 1`.
    pub vertices: [DVector<f64>; 3],
}

impl StraightTriangle {
    pub fn new(body: &ConvexBody, a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<Self> {
        let mut lifted = Vec::with_capacity(3);
        for v in [a, b, c] {
            if v.len() != body.size() {
                return Err(Error::DimensionMismatch {
                    expected: body.size(),
                    got: v.len(),
                });
            }
            let v = body.lift(v).ok_or(Error::DegenerateTriangle)?;
            if body.locate_with_tol(&v, 1e-8) == Location::Exterior {
                return Err(Error::NotInterior);
            }
            lifted.push(v);
        }
        let span = nalgebra::DMatrix::from_columns(&lifted);
        if linalg::rank(&span, 1e-10) < 3 {
            return Err(Error::DegenerateTriangle);
        }
        let [a, b, c]: [DVector<f64>; 3] = lifted.try_into().expect("three vertices");
        Ok(Self { vertices: [a, b, c] })
    }

    /// Vertices on the boundary are moved toward the centroid by the fraction `eps`.
    pub fn nudged(&self, body: &ConvexBody, eps: f64) -> (Self, [bool; 3]) {
        let centroid = self.centroid();
        let mut moved = [false; 3];
        let mut out = self.vertices.clone();
        for (i, v) in self.vertices.iter().enumerate() {
            if !body.is_interior(v) {
                out[i] = v + (&centroid - v) * eps;
                moved[i] = true;
            }
        }
        (Self { vertices: out }, moved)
    }

    pub fn centroid(&self) -> DVector<f64> {
        (&self.vertices[0] + &self.vertices[1] + &self.vertices[2]) / 3.0
    }

    /// `a w_0 + b w_1 + c w_2` for barycentric weights.
    pub fn point(&self, weights: [f64; 3]) -> DVector<f64> {
        let total: f64 = weights.iter().sum();
        (&self.vertices[0] * weights[0] + &self.vertices[1] * weights[1] + &self.vertices[2] * weights[2]) / total
    }

    /// Largest Euclidean edge length in the slice.
    pub fn diameter(&self) -> f64 {
        let [a, b, c] = &self.vertices;
        (a - b).norm().max((b - c).norm()).max((c - a).norm())
    }
}

/// An interior segment parametrized by Hilbert arclength from `start`.
struct Side<'a> {
    body: &'a ConvexBody,
    start: DVector<f64>,
    dir: DVector<f64>,
    length: f64,
}

impl<'a> Side<'a> {
    fn new(body: &'a ConvexBody, p: &DVector<f64>, q: &DVector<f64>) -> Result<Self> {
        Ok(Self {
            body,
            start: p.clone(),
            dir: q - p,
            length: distance_coords(body, p, q)?,
        })
    }

    fn at(&self, r: f64) -> Result<DVector<f64>> {
        if r <= 0.0 {
            return Ok(self.start.clone());
        }
        ball_point(self.body, &self.start, &self.dir, r.min(self.length))
    }

    fn grid(&self, samples: usize) -> Vec<f64> {
        let m = samples.max(2);
        (0..m).map(|i| self.length * i as f64 / (m - 1) as f64).collect()
    }

    fn spacing(&self, samples: usize) -> f64 {
        self.length / (samples.max(2) - 1) as f64
    }

    /// Distance from `x` to the side: best sample, then golden-section polish.
    fn distance_from(&self, x: &DVector<f64>, samples: usize) -> Result<f64> {
        let f = |r: f64| -> Result<f64> { distance_coords(self.body, x, &self.at(r)?) };
        extremum(&self.grid(samples), f, false)
    }
}

/// Best grid value of `f`, polished on the bracketing cell. Minimizes, or
/// maximizes with `maximize`.
fn extremum(grid: &[f64], f: impl Fn(f64) -> Result<f64>, maximize: bool) -> Result<f64> {
    let sign = if maximize { -1.0 } else { 1.0 };
    let g = |r: f64| f(r).map(|v| sign * v);
    let mut best = (0, f64::INFINITY);
    for (i, r) in grid.iter().enumerate() {
        let v = g(*r)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let (i, mut value) = best;
    let mut a = grid[i.saturating_sub(1)];
    let mut b = grid[(i + 1).min(grid.len() - 1)];
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (g(c)?, g(d)?);
    for _ in 0..GOLDEN_STEPS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = g(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = g(d)?;
        }
    }
    value = value.min(fc).min(fd);
    Ok(sign * value)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThinnessReport {
    pub delta: f64,
    /// Half the largest arclength spacing between side samples.
    pub resolution: f64,
    pub samples: usize,
    pub nudged: [bool; 3],
    pub nudge: f64,
}

/// Largest distance from a point of one side to the union of the other two.
pub fn triangle_thinness(body: &ConvexBody, t: &StraightTriangle, samples: usize) -> Result<ThinnessReport> {
    triangle_thinness_with(body, t, samples, DEFAULT_NUDGE)
}

pub fn triangle_thinness_with(body: &ConvexBody, t: &StraightTriangle, samples: usize, nudge: f64) -> Result<ThinnessReport> {
    let (t, nudged) = t.nudged(body, nudge);
    let sides = sides(body, &t)?;
    let mut delta = 0.0f64;
    for i in 0..3 {
        let (others, side) = ([&sides[(i + 1) % 3], &sides[(i + 2) % 3]], &sides[i]);
        let gap = |r: f64| -> Result<f64> {
            let x = side.at(r)?;
            Ok(others[0].distance_from(&x, samples)?.min(others[1].distance_from(&x, samples)?))
        };
        delta = delta.max(extremum(&side.grid(samples), gap, true)?);
    }
    let resolution = 0.5 * sides.iter().map(|s| s.spacing(samples)).fold(0.0, f64::max);
    Ok(ThinnessReport {
        delta,
        resolution,
        samples,
        nudged,
        nudge,
    })
}

fn sides<'a>(body: &'a ConvexBody, t: &StraightTriangle) -> Result<[Side<'a>; 3]> {
    let [a, b, c] = &t.vertices;
    if [a, b, c].iter().any(|v| !body.is_interior(v)) {
        return Err(Error::NotInterior);
    }
    Ok([Side::new(body, a, b)?, Side::new(body, b, c)?, Side::new(body, c, a)?])
}

/// Hilbert distance from `x` to the boundary of the triangle.
fn depth(sides: &[Side; 3], x: &DVector<f64>, samples: usize) -> Result<f64> {
    let mut best = f64::INFINITY;
    for s in sides {
        best = best.min(s.distance_from(x, samples)?);
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct Incenter {
    pub point: DVector<f64>,
    pub inradius: f64,
    /// Barycentric weights of the point.
    pub weights: [f64; 3],
}

/// The point of the triangle farthest from its boundary, with that distance.
pub fn incenter(body: &ConvexBody, t: &StraightTriangle, samples: usize, seed: u64) -> Result<Incenter> {
    let (t, _) = t.nudged(body, DEFAULT_NUDGE);
    let sides = sides(body, &t)?;
    let score = |w: [f64; 3]| -> Result<f64> {
        if w.iter().any(|c| *c <= 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        depth(&sides, &t.point(w), samples)
    };
    let mut rng = sampling::rng(seed);
    let mut best = ([1.0 / 3.0; 3], score([1.0 / 3.0; 3])?);
    for _ in 0..64 {
        let e: [f64; 3] = std::array::from_fn(|_| -rng.gen::<f64>().max(1e-300).ln());
        let total: f64 = e.iter().sum();
        let w = e.map(|c| c / total);
        let v = score(w)?;
        if v > best.1 {
            best = (w, v);
        }
    }
    // Pattern search on barycentric coordinates.
    let mut step = 0.1;
    let moves = [[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 1.0, -1.0], [0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 0.0, 1.0]];
    while step > 1e-9 {
        let mut improved = false;
        for m in &moves {
            let w: [f64; 3] = std::array::from_fn(|i| best.0[i] + step * m[i]);
            let v = score(w)?;
            if v > best.1 {
                best = (w, v);
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(Incenter {
        point: t.point(best.0),
        inradius: best.1,
        weights: best.0,
    })
}

/// Whether the triangle's sides lie in the boundary and its interior in the body.
pub fn pet_check(body: &ConvexBody, t: &StraightTriangle) -> Result<bool> {
    const EDGE_SAMPLES: usize = 50;
    let [a, b, c] = &t.vertices;
    for (p, q) in [(a, b), (b, c), (c, a)] {
        for i in 0..=EDGE_SAMPLES {
            let s = i as f64 / EDGE_SAMPLES as f64;
            let x = p + (q - p) * s;
            if (body.gauge(&x) - 1.0).abs() > 1e-8 {
                return Ok(false);
            }
        }
    }
    let mut rng = sampling::rng(0x7e7);
    for _ in 0..64 {
        let w: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.01..1.0));
        if !body.is_interior(&t.point(w)) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct FatWitness {
    pub triangle: StraightTriangle,
    pub delta: f64,
    pub evaluations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct FatSearch {
    pub witness: Option<FatWitness>,
    /// Largest thinness seen, whether or not it reached the target.
    pub best_delta: f64,
    pub evaluations: usize,
}

/// Random boundary triangles improved by hill climbing on thinness.
///
/// `budget` counts thinness evaluations. A witness refutes hyperbolicity at
/// level `delta_target`; its thinness is recomputed at the full sample size.
pub fn fat_triangle_search(body: &ConvexBody, delta_target: f64, budget: usize, seed: u64) -> Result<FatSearch> {
    const SEARCH_SAMPLES: usize = 40;
    const CLIMB: usize = 12;
    let tangent = body.tangent_basis();
    let boundary = |u: &DVector<f64>| body.boundary_point(&(tangent * u.normalize()));
    let measure = |dirs: &[DVector<f64>; 3], samples: usize| -> Result<Option<(StraightTriangle, f64)>> {
        let pts: Vec<_> = dirs.iter().filter_map(boundary).collect();
        if pts.len() < 3 {
            return Ok(None);
        }
        match StraightTriangle::new(body, &pts[0], &pts[1], &pts[2]) {
            Ok(t) => {
                let d = triangle_thinness(body, &t, samples)?.delta;
                Ok(Some((t, d)))
            }
            Err(Error::DegenerateTriangle) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut evaluations = 0;
    let mut best_delta = 0.0f64;
    let mut restart = 0u64;
    while evaluations < budget {
        let mut rng = sampling::shard_rng(seed, restart);
        restart += 1;
        let mut dirs: [DVector<f64>; 3] = std::array::from_fn(|_| sampling::unit_vector(&mut rng, body.dim));
        evaluations += 1;
        let Some((_, mut current)) = measure(&dirs, SEARCH_SAMPLES)? else {
            continue;
        };
        let mut scale = 0.5;
        for _ in 0..CLIMB {
            if evaluations >= budget || current >= delta_target {
                break;
            }
            let k = rng.gen_range(0..3);
            let mut trial = dirs.clone();
            trial[k] = (&trial[k] + sampling::gaussian_vector(&mut rng, body.dim) * scale).normalize();
            evaluations += 1;
            match measure(&trial, SEARCH_SAMPLES)? {
                Some((_, d)) if d > current => {
                    dirs = trial;
                    current = d;
                }
                _ => scale *= 0.7,
            }
        }
        best_delta = best_delta.max(current);
        if current >= delta_target {
            if let Some((triangle, delta)) = measure(&dirs, DEFAULT_SIDE_SAMPLES)? {
                best_delta = best_delta.max(delta);
                if delta >= delta_target {
                    return Ok(FatSearch {
                        witness: Some(FatWitness {
                            triangle,
                            delta,
                            evaluations,
                        }),
                        best_delta,
                        evaluations,
                    });
                }
            }
        }
    }
    Ok(FatSearch {
        witness: None,
        best_delta,
        evaluations,
    })
}

#[cfg(test)]
mod tests;
