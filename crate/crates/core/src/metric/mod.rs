//! Hilbert distance, the Finsler norm, metric balls and Busemann volume.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::domain::{BodyKind, ConvexBody};
use crate::error::{Error, Result};
use crate::projlin::ProjPoint;
use crate::sampling::{self, Moments};

pub mod properties;

/// Finsler norm of a unit chart direction at an interior point.
#[derive(Clone, Debug)]
pub struct FinslerSample {
    pub base: ProjPoint,
    pub direction: DVector<f64>,
    pub norm_value: f64,
}

/// Rejects points outside the open body when the kind has a cheap exact test.
/// Other kinds are caught by the chord oracle.
fn check_interior(body: &ConvexBody, x: &DVector<f64>) -> Result<()> {
    let exact = matches!(
        body.kind,
        BodyKind::Ellipsoid { .. } | BodyKind::PolytopeH { .. } | BodyKind::Simplex
    );
    if exact && !body.is_interior(x) {
        return Err(Error::NotInterior);
    }
    Ok(())
}

fn interior(body: &ConvexBody, x: &DVector<f64>) -> bool {
    match body.kind {
        BodyKind::Ellipsoid { .. } | BodyKind::PolytopeH { .. } | BodyKind::Simplex => body.is_interior(x),
        _ => body.gauge(x) < 1.0,
    }
}

fn lift_interior(body: &ConvexBody, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != body.size() {
        return Err(Error::DimensionMismatch {
            expected: body.size(),
            got: x.len(),
        });
    }
    let xl = body.lift(x).ok_or(Error::NotInterior)?;
    check_interior(body, &xl)?;
    Ok(xl)
}

/// `log` of the cross ratio along the chord `A + s D`, with `a` at `s = 0` and
/// `b` at `s = 1`.
fn log_cross_ratio(s_minus: f64, s_plus: f64) -> f64 {
    let left = if s_minus.is_finite() { (-1.0 / s_minus).ln_1p() } else { 0.0 };
    let right = if s_plus.is_finite() { (1.0 / (s_plus - 1.0)).ln_1p() } else { 0.0 };
    left + right
}

/// Distance between homogeneous representatives of two interior points.
pub fn distance_coords(body: &ConvexBody, a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    let mut al = lift_interior(body, a)?;
    let mut bl = lift_interior(body, b)?;
    // Fixed argument order makes the result exactly symmetric.
    if bl.iter().partial_cmp(al.iter()) == Some(std::cmp::Ordering::Less) {
        std::mem::swap(&mut al, &mut bl);
    }
    let d = &bl - &al;
    if d.norm() <= 1e-15 * al.norm() {
        return Ok(0.0);
    }
    let (lo, hi) = body.cone_interval(&al, &d).ok_or(Error::NotInterior)?;
    if !(lo < 0.0 && hi > 1.0) {
        return Err(Error::NotInterior);
    }
    Ok(log_cross_ratio(lo, hi))
}

/// `log |CR(x, a, b, y)|` along the chord through `a` and `b`.
pub fn hilbert_distance(body: &ConvexBody, a: &ProjPoint, b: &ProjPoint) -> Result<f64> {
    distance_coords(body, &a.coords, &b.coords)
}

/// Slice displacement of `a` under the homogeneous velocity `v`.
fn slice_velocity(body: &ConvexBody, a: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let w = body.omega.dot(a);
    let al = a / w;
    (v - &al * body.omega.dot(v)) / w
}

/// `1/|a - x| + 1/|a - y|` times `|v|`, for `a` in the slice and `d` in `ker omega`.
fn finsler_slice(body: &ConvexBody, al: &DVector<f64>, d: &DVector<f64>) -> Result<f64> {
    if d.norm() == 0.0 {
        return Ok(0.0);
    }
    if let BodyKind::Ellipsoid { form } = &body.kind {
        let qd = form * d;
        let qa = al.dot(&(form * al));
        if qa >= 0.0 {
            return Err(Error::NotInterior);
        }
        let b = al.dot(&qd);
        let c = d.dot(&qd);
        let disc = b * b - c * qa;
        return Ok(2.0 * disc.max(0.0).sqrt() / -qa);
    }
    let (lo, hi) = body.cone_interval(al, d).ok_or(Error::NotInterior)?;
    if !(lo < 0.0 && hi > 0.0) {
        return Err(Error::NotInterior);
    }
    Ok(1.0 / -lo + 1.0 / hi)
}

/// Finsler norm of `v` at `a`.
///
/// `v` is either a tangent vector of the standard affine chart (length `n`) or a
/// homogeneous velocity (length `n + 1`), in which case the norm is that of the
/// curve `a + t v` at `t = 0` and depends on the scale of `a`.
pub fn finsler_norm(body: &ConvexBody, a: &ProjPoint, v: &DVector<f64>) -> Result<f64> {
    let n = body.dim;
    let (base, vel) = if v.len() == n {
        let w = a.coords[n];
        if w.abs() <= 1e-300 {
            return Err(Error::InvalidInput("point is at infinity in the standard chart".into()));
        }
        (&a.coords / w, v.clone().insert_row(n, 0.0))
    } else if v.len() == n + 1 {
        (a.coords.clone(), v.clone())
    } else {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    };
    let al = lift_interior(body, &base)?;
    let d = slice_velocity(body, &base, &vel);
    finsler_slice(body, &al, &d)
}

/// Norm of a unit chart direction, together with its inputs.
pub fn finsler_sample(body: &ConvexBody, a: &ProjPoint, direction: &DVector<f64>) -> Result<FinslerSample> {
    if direction.norm() == 0.0 {
        return Err(Error::InvalidInput("zero direction".into()));
    }
    let direction = direction.normalize();
    let norm_value = finsler_norm(body, a, &direction)?;
    Ok(FinslerSample {
        base: a.clone(),
        direction,
        norm_value,
    })
}

/// The point at distance `r` from `center` in slice direction `d` (in `ker omega`).
pub fn ball_point(body: &ConvexBody, center: &DVector<f64>, d: &DVector<f64>, r: f64) -> Result<DVector<f64>> {
    let cl = lift_interior(body, center)?;
    let (lo, hi) = body.cone_interval(&cl, d).ok_or(Error::NotInterior)?;
    if !(lo < 0.0 && hi > 0.0) || !hi.is_finite() {
        return Err(Error::NumericalFailure("chord is not bounded ahead of the center".into()));
    }
    // Invert d(s) = log((s - lo) / -lo) + log(hi / (hi - s)).
    let s = if lo.is_finite() {
        -lo * hi * r.exp_m1() / (hi - r.exp() * lo)
    } else {
        -hi * (-r).exp_m1()
    };
    Ok(cl + d * s)
}

/// Boundary sample of the closed ball `B_r(center)`, one point per direction of
/// the slice tangent space.
pub fn metric_ball(body: &ConvexBody, center: &ProjPoint, r: f64, samples: usize, seed: u64) -> Result<Vec<ProjPoint>> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput("radius must be positive".into()));
    }
    let grid = sampling::direction_set(body.dim, samples, seed);
    let tangent = body.tangent_basis();
    grid.column_iter()
        .map(|u| ball_point(body, &center.coords, &(tangent * u), r).and_then(ProjPoint::new))
        .collect()
}

/// Region for volume estimates. Bounds are boxes in slice coordinates
/// (see [`ConvexBody::slice_coords`]).
#[derive(Clone)]
pub enum Region {
    HilbertBall { center: ProjPoint, radius: f64 },
    Predicate {
        test: Arc<dyn Fn(&DVector<f64>) -> bool + Send + Sync>,
        bounds: Option<(DVector<f64>, DVector<f64>)>,
    },
}

impl std::fmt::Debug for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Region::HilbertBall { center, radius } => f
                .debug_struct("HilbertBall")
                .field("center", &center.coords.as_slice())
                .field("radius", radius)
                .finish(),
            Region::Predicate { bounds, .. } => f.debug_struct("Predicate").field("bounds", bounds).finish(),
        }
    }
}

impl Region {
    pub fn predicate(test: impl Fn(&DVector<f64>) -> bool + Send + Sync + 'static) -> Self {
        Region::Predicate {
            test: Arc::new(test),
            bounds: None,
        }
    }

    pub fn empty() -> Self {
        Self::predicate(|_| false)
    }

    pub fn contains(&self, body: &ConvexBody, x: &DVector<f64>) -> bool {
        match self {
            Region::HilbertBall { center, radius } => {
                distance_coords(body, &center.coords, x).is_ok_and(|d| d <= *radius)
            }
            Region::Predicate { test, .. } => test(x),
        }
    }

    /// Bounding box in slice coordinates.
    pub fn bounds(&self, body: &ConvexBody) -> Result<(DVector<f64>, DVector<f64>)> {
        let count = 64.max(32 * body.dim);
        match self {
            Region::HilbertBall { center, radius } => {
                let ball = metric_ball(body, center, *radius, count, 0xb0b)?;
                let axes = axis_directions(body.dim);
                let tangent = body.tangent_basis();
                let mut pts: Vec<DVector<f64>> = ball.into_iter().map(|p| p.coords).collect();
                for u in axes.column_iter() {
                    pts.push(ball_point(body, &center.coords, &(tangent * u), *radius)?);
                }
                padded_box(body, &pts)
            }
            Region::Predicate { bounds: Some(b), .. } => Ok(b.clone()),
            Region::Predicate { bounds: None, .. } => slice_bounds(body, count),
        }
    }
}

fn axis_directions(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, 2 * n);
    for i in 0..n {
        m[(i, 2 * i)] = 1.0;
        m[(i, 2 * i + 1)] = -1.0;
    }
    m
}

/// Bounding box of the sample, padded by 5% of its width on each side.
fn padded_box(body: &ConvexBody, pts: &[DVector<f64>]) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = body.dim;
    let mut lo = DVector::from_element(n, f64::INFINITY);
    let mut hi = DVector::from_element(n, f64::NEG_INFINITY);
    for p in pts {
        let y = body.slice_coords(p).ok_or(Error::NotInterior)?;
        lo = lo.inf(&y);
        hi = hi.sup(&y);
    }
    let pad = (&hi - &lo) * 0.05;
    Ok((lo - &pad, hi + pad))
}

/// Bounding box of the whole slice, from radial boundary samples around the witness.
pub fn slice_bounds(body: &ConvexBody, count: usize) -> Result<(DVector<f64>, DVector<f64>)> {
    let tangent = body.tangent_basis();
    let mut grid = sampling::direction_set(body.dim, count, 0x51ce);
    let axes = axis_directions(body.dim);
    grid = DMatrix::from_columns(&grid.column_iter().chain(axes.column_iter()).collect::<Vec<_>>());
    let mut pts = Vec::with_capacity(grid.ncols());
    for u in grid.column_iter() {
        let p = body
            .boundary_point(&(tangent * u))
            .ok_or_else(|| Error::NumericalFailure("slice is unbounded".into()))?;
        pts.push(p);
    }
    padded_box(body, &pts)
}

#[derive(Clone, Debug)]
pub struct VolumeOptions {
    /// Directions used to estimate the unit Finsler ball.
    pub directions: usize,
    /// Use the exact Riemannian density on ellipsoids.
    pub exact_ellipsoid_density: bool,
    pub shard_size: usize,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        Self {
            directions: 256,
            exact_ellipsoid_density: true,
            shard_size: 8192,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Samples of the bounding box that fell outside the body.
    pub rejected: usize,
}

/// Busemann density at an interior point, with respect to Lebesgue measure in
/// slice coordinates: `vol(unit Euclidean ball) / vol(unit Finsler ball)`.
pub fn busemann_density(body: &ConvexBody, x: &DVector<f64>, directions: usize) -> Result<f64> {
    let grid = sampling::direction_set(body.dim, directions, 0xd1);
    let xl = lift_interior(body, x)?;
    density_sampled(body, &xl, &grid)
}

fn density_sampled(body: &ConvexBody, xl: &DVector<f64>, grid: &DMatrix<f64>) -> Result<f64> {
    let n = body.dim as i32;
    let tangent = body.tangent_basis();
    let mut acc = 0.0;
    for u in grid.column_iter() {
        let f = finsler_slice(body, xl, &(tangent * u))?;
        acc += f.powi(-n);
    }
    Ok(grid.ncols() as f64 / acc)
}

/// On `{Q < 0}` the Finsler norm is `F(D)^2 = 4 D^T (QA A^T Q - q(A) Q) D / q(A)^2`,
/// so the density is `sqrt det` of that form on `ker omega`.
fn density_ellipsoid(form: &DMatrix<f64>, tangent: &DMatrix<f64>, xl: &DVector<f64>) -> Option<f64> {
    let qa_vec = form * xl;
    let qa = xl.dot(&qa_vec);
    if qa >= 0.0 {
        return None;
    }
    let g = (&qa_vec * qa_vec.transpose() - form * qa) * (4.0 / (qa * qa));
    let gt = tangent.transpose() * g * tangent;
    let det = gt.determinant();
    (det > 0.0).then(|| det.sqrt())
}

pub fn busemann_volume(body: &ConvexBody, region: &Region, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    busemann_volume_with(body, region, samples, seed, &VolumeOptions::default())
}

/// Monte Carlo estimate of the Busemann volume of `region`, uniform in its
/// bounding box. Shard `k` draws from `shard_rng(seed, k)`, so the result does
/// not depend on how shards are scheduled.
pub fn busemann_volume_with(
    body: &ConvexBody,
    region: &Region,
    samples: usize,
    seed: u64,
    opts: &VolumeOptions,
) -> Result<VolumeEstimate> {
    use rand::Rng;
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let (lo, hi) = region.bounds(body)?;
    let width = &hi - &lo;
    let box_volume: f64 = width.iter().product();
    let grid = sampling::direction_set(body.dim, opts.directions.max(1), 0xd1);
    let exact_form = match (&body.kind, opts.exact_ellipsoid_density) {
        (BodyKind::Ellipsoid { form }, true) => Some(form),
        _ => None,
    };
    let tangent = body.tangent_basis();
    let shard_size = opts.shard_size.max(1);
    let mut moments = Moments::default();
    let mut rejected = 0;
    let mut y = DVector::zeros(body.dim);
    for shard in 0..samples.div_ceil(shard_size) {
        let mut rng = sampling::shard_rng(seed, shard as u64);
        let count = shard_size.min(samples - shard * shard_size);
        for _ in 0..count {
            for i in 0..body.dim {
                y[i] = lo[i] + width[i] * rng.gen::<f64>();
            }
            let x = body.from_slice_coords(&y);
            if !interior(body, &x) {
                rejected += 1;
                moments.push(0.0);
                continue;
            }
            if !region.contains(body, &x) {
                moments.push(0.0);
                continue;
            }
            let density = match exact_form {
                Some(form) => density_ellipsoid(form, tangent, &x),
                None => density_sampled(body, &x, &grid).ok(),
            };
            match density {
                Some(rho) => moments.push(rho),
                None => {
                    rejected += 1;
                    moments.push(0.0);
                }
            }
        }
    }
    Ok(VolumeEstimate {
        estimate: box_volume * moments.mean(),
        std_error: box_volume * moments.std_error(),
        samples,
        rejected,
    })
}

#[cfg(test)]
mod tests;
