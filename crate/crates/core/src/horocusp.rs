//! Parabolic coordinates, algebraic horospheres and Busemann functions.
//!
//! A chart centered on `(H, p)` is the affine patch with `H` at infinity, a
//! second boundary point `r` at the origin and `p` in the vertical direction.
//! Horospheres are then the vertical translates of the lower boundary graph.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::domain::{boundary_probe, BodyKind, ConvexBody, Location};
use crate::error::{Error, Result};
use crate::isometry;
use crate::linalg;
use crate::metric::{distance_coords, properties::PropertyReport};
use crate::projlin::{ProjMap, ProjPoint};
use crate::sampling;

const SUPPORT_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ParabolicChart {
    pub body: ConvexBody,
    /// Representative of `p` with `omega(p) > 0`.
    pub p: DVector<f64>,
    /// Supporting covector at `p`, positive on the interior.
    pub h: DVector<f64>,
    /// Representative of `r` with `h(r) = 1`.
    pub r: DVector<f64>,
    /// Supporting covector at `r` with `k(p) = 1`; its kernel is the chart's `x_n = 0`.
    pub k: DVector<f64>,
    /// Columns `[r, b_1 .. b_{n-1}, p]`; chart point `y` is `frame * (1, y)`.
    pub frame: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

/// Chart centered on `(h, p)` with origin at `r`.
pub fn make_chart(body: &ConvexBody, p: &ProjPoint, h: &DVector<f64>, r: &ProjPoint) -> Result<ParabolicChart> {
    let size = body.size();
    if p.coords.len() != size || h.len() != size || r.coords.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: p.coords.len().min(h.len()).min(r.coords.len()),
        });
    }
    let p = oriented(body, &p.coords).ok_or(Error::NotBoundary)?;
    if body.locate(&p) != Location::Boundary {
        return Err(Error::NotBoundary);
    }
    let mut h = h.normalize();
    if h.dot(&body.witness) < 0.0 {
        h = -h;
    }
    if !supports(body, &h, &p) {
        return Err(Error::NotSupporting);
    }
    let r = oriented(body, &r.coords).ok_or(Error::SegmentNotInterior)?;
    if body.locate(&r) != Location::Boundary {
        return Err(Error::SegmentNotInterior);
    }
    let hr = h.dot(&r);
    if hr <= SUPPORT_TOL * r.norm() {
        return Err(Error::SegmentNotInterior);
    }
    let r = r / hr;
    let pn = p.normalize();
    for t in [0.1, 0.5, 0.9] {
        if !body.is_interior(&(&r * (1.0 - t) + &pn * t)) {
            return Err(Error::SegmentNotInterior);
        }
    }
    let k = body
        .supporting_covectors(&r, 64, 0x4b)?
        .into_iter()
        .map(|k| {
            let kp = k.dot(&p);
            k / kp
        })
        .find(|k| k.iter().all(|v| v.is_finite()))
        .ok_or(Error::SegmentNotInterior)?;
    let constraints = DMatrix::from_rows(&[h.transpose(), k.transpose()]);
    let middle = linalg::kernel_of_dim(&constraints, size - 2);
    let mut frame = DMatrix::zeros(size, size);
    frame.set_column(0, &r);
    for j in 0..size - 2 {
        frame.set_column(j + 1, &middle.column(j));
    }
    frame.set_column(size - 1, &p);
    let inverse = frame.clone().try_inverse().ok_or(Error::SegmentNotInterior)?;
    Ok(ParabolicChart {
        body: body.clone(),
        p,
        h,
        r,
        k,
        frame,
        inverse,
    })
}

/// Chart whose origin is the lower end of the vertical line through the witness.
///
/// Without `h`, the first supporting covector found at `p` is used.
pub fn make_default_chart(body: &ConvexBody, p: &ProjPoint, h: Option<&DVector<f64>>) -> Result<ParabolicChart> {
    let h = match h {
        Some(h) => h.clone(),
        None => body.supporting_covectors(&p.coords, 64, 0x4a)?.swap_remove(0),
    };
    let pl = oriented(body, &p.coords).ok_or(Error::NotBoundary)?;
    let (lo, _) = body
        .cone_interval(&body.witness, &pl)
        .ok_or(Error::SegmentNotInterior)?;
    if !lo.is_finite() {
        return Err(Error::SegmentNotInterior);
    }
    let r = ProjPoint::new(&body.witness + &pl * lo)?;
    make_chart(body, p, &h, &r)
}

/// Representative on the side where `omega` is positive.
fn oriented(body: &ConvexBody, x: &DVector<f64>) -> Option<DVector<f64>> {
    let w = body.omega.dot(x);
    if w > 0.0 {
        Some(x.clone())
    } else if w < 0.0 {
        Some(-x)
    } else {
        None
    }
}

/// `h(p) = 0` and `h >= 0` on the closure (exact for ellipsoids and vertex lists, sampled otherwise).
pub(crate) fn supports(body: &ConvexBody, h: &DVector<f64>, p: &DVector<f64>) -> bool {
    if h.dot(p).abs() > SUPPORT_TOL * p.norm() {
        return false;
    }
    match &body.kind {
        BodyKind::Ellipsoid { form } => {
            let normal = -(form * p);
            return normal.normalize().dot(h) > 1.0 - 1e-9;
        }
        BodyKind::PolytopeV { vertices, .. } => {
            return vertices.iter().all(|v| {
                let v = oriented(body, v).unwrap_or_else(|| v.clone());
                h.dot(&v) >= -SUPPORT_TOL * v.norm()
            })
        }
        _ => {}
    }
    let directions = sampling::direction_set(body.dim, 256, 0x4d);
    directions.column_iter().all(|u| {
        let u = body.tangent_basis() * u;
        match body.boundary_point(&u) {
            Some(b) => h.dot(&b) >= -1e-9 * b.norm(),
            None => true,
        }
    })
}

impl ParabolicChart {
    pub fn dim(&self) -> usize {
        self.body.dim
    }

    /// Chart coordinates `(u, y_n)` of a point with `h(x) > 0`.
    pub fn to_chart(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let y = &self.inverse * x;
        let scale = y[0];
        if scale.abs() <= 1e-14 * x.norm() {
            return Err(Error::InvalidInput("point lies on the hyperplane at infinity".into()));
        }
        Ok(y.rows(1, self.dim()).into_owned() / scale)
    }

    /// Homogeneous representative of the chart point `y`.
    pub fn from_chart(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(self.dim() + 1);
        full[0] = 1.0;
        full.rows_mut(1, self.dim()).copy_from(y);
        &self.frame * full
    }

    fn base_point(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.dim());
        y.rows_mut(0, self.dim() - 1).copy_from(u);
        self.from_chart(&y)
    }

    /// The lower boundary graph `f(u)`: where the vertical line over `u` enters the body.
    pub fn boundary_graph(&self, u: &DVector<f64>) -> Result<f64> {
        if u.len() + 1 != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim() - 1,
                got: u.len(),
            });
        }
        let z = self.base_point(u);
        // Climb toward p until the vertical line is inside, then read off the chord.
        let mut s = 1.0;
        for _ in 0..64 {
            let a = &z + &self.p * s;
            if self.body.is_interior(&a) {
                let (lo, _) = self.body.cone_interval(&a, &self.p).ok_or(Error::OutsideRadialShadow)?;
                return Ok(s + lo);
            }
            s *= 2.0;
        }
        Err(Error::OutsideRadialShadow)
    }

    /// Homogeneous point on the horosphere at height `t` over `u`.
    pub fn level_point(&self, u: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        let f = self.boundary_graph(u)?;
        let mut y = DVector::zeros(self.dim());
        y.rows_mut(0, self.dim() - 1).copy_from(u);
        y[self.dim() - 1] = f + t;
        Ok(self.from_chart(&y))
    }

    /// Horosphere level of a point of the closure: vertical coordinate minus the boundary graph.
    pub fn height(&self, q: &DVector<f64>) -> Result<f64> {
        if self.body.locate(q) == Location::Exterior {
            return Err(Error::NotInterior);
        }
        let y = self.to_chart(q)?;
        let n = self.dim();
        let u = y.rows(0, n - 1).into_owned();
        Ok(y[n - 1] - self.boundary_graph(&u)?)
    }

    /// `x -> x + t e_n` in the chart, that is `I + t p h^T`.
    pub fn vertical_translation(&self, t: f64) -> ProjMap {
        let size = self.body.size();
        let m = DMatrix::identity(size, size) + &self.p * self.h.transpose() * t;
        ProjMap::new(m).expect("unipotent matrix is invertible")
    }

    /// `log(lambda_+ / lambda_-)` for `b` in the stabilizer of the body, `h` and `p`.
    pub fn displacement(&self, b: &ProjMap) -> Result<f64> {
        if b.size() != self.body.size() || !isometry::preserves(&self.body, b, 64) {
            return Err(Error::NotInStabilizer);
        }
        let m = &b.matrix;
        let tol = 1e-8 * m.norm();
        let bp = m * &self.p;
        let plus = bp.dot(&self.p) / self.p.norm_squared();
        let hb = m.transpose() * &self.h;
        let minus = hb.dot(&self.h) / self.h.norm_squared();
        let p_err = (&bp - &self.p * plus).norm() / self.p.norm();
        let h_err = (&hb - &self.h * minus).norm() / self.h.norm();
        if p_err > tol || h_err > tol || plus * minus <= 0.0 {
            return Err(Error::NotInStabilizer);
        }
        Ok((plus / minus).ln())
    }

    /// Busemann function of the vertical ray through the chart origin, with `beta = 0` at height 1.
    pub fn busemann(&self, q: &DVector<f64>, t_max: f64) -> Result<BusemannEstimate> {
        if !self.body.is_interior(q) {
            return Err(Error::NotInterior);
        }
        let mut start = DVector::zeros(self.dim());
        start[self.dim() - 1] = 1.0;
        let start = self.body.lift(&self.from_chart(&start)).ok_or(Error::NotInterior)?;
        let (lo, _) = self.body.cone_interval(&start, &self.p).ok_or(Error::NotInterior)?;
        if !(lo.is_finite() && lo < 0.0) {
            return Err(Error::NumericalFailure("vertical ray has no lower endpoint".into()));
        }
        // d(start, start + s p) = log((s - lo) / -lo) along the ray.
        let ray = |t: f64| &start + &self.p * (-lo * t.exp_m1());
        let mut previous = distance_coords(&self.body, q, &start)?;
        let mut t = 0.0;
        let mut gap = f64::INFINITY;
        let mut converged = false;
        while t + 1.0 <= t_max + 1e-12 {
            t += 1.0;
            let value = distance_coords(&self.body, q, &ray(t))? - t;
            gap = (previous - value).abs();
            previous = value;
            if gap < 1e-6 {
                converged = true;
                break;
            }
        }
        Ok(BusemannEstimate {
            value: previous,
            gap,
            t_reached: t,
            converged,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BusemannEstimate {
    pub value: f64,
    /// Last successive difference.
    pub gap: f64,
    pub t_reached: f64,
    pub converged: bool,
}

pub fn horosphere_height(chart: &ParabolicChart, q: &ProjPoint) -> Result<f64> {
    chart.height(&q.coords)
}

pub fn vertical_translation(chart: &ParabolicChart, t: f64) -> ProjMap {
    chart.vertical_translation(t)
}

pub fn displacement(chart: &ParabolicChart, b: &ProjMap) -> Result<f64> {
    chart.displacement(b)
}

/// Busemann function toward a C1 boundary point, along the vertical ray of the default chart.
pub fn busemann(body: &ConvexBody, p: &ProjPoint, q: &ProjPoint, t_max: f64) -> Result<BusemannEstimate> {
    if !boundary_probe(body, p, 32)?.is_c1 {
        return Err(Error::NotC1Point);
    }
    make_default_chart(body, p, None)?.busemann(&q.coords, t_max)
}

/// The unipotent `(n+2) x (n+2)` matrix with first row `(1, u, |u|^2/2)` and last column `(|u|^2/2, u, 1)`.
pub fn translation_group_element(u: &DVector<f64>) -> ProjMap {
    let n = u.len();
    let half = 0.5 * u.norm_squared();
    let mut m = DMatrix::identity(n + 2, n + 2);
    for i in 0..n {
        m[(0, i + 1)] = u[i];
        m[(i + 1, n + 1)] = u[i];
    }
    m[(0, n + 1)] = half;
    ProjMap::new(m).expect("unipotent matrix is invertible")
}

/// Affine image `(x_0, x)` of the origin `[0 : .. : 0 : 1]` under `T_u`.
pub fn orbit_point(u: &DVector<f64>) -> DVector<f64> {
    let n = u.len();
    let mut origin = DVector::zeros(n + 2);
    origin[n + 1] = 1.0;
    let image = &translation_group_element(u).matrix * origin;
    image.rows(0, n + 1) / image[n + 1]
}

/// Projective map taking the paraboloid `x_0 w = |x|^2 / 2` to the unit sphere.
pub fn paraboloid_to_ball(n: usize) -> DMatrix<f64> {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = DMatrix::identity(n + 2, n + 2);
    m[(0, 0)] = c;
    m[(0, n + 1)] = -c;
    m[(n + 1, 0)] = c;
    m[(n + 1, n + 1)] = c;
    m
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipsoidDemoReport {
    pub n: usize,
    pub points: Vec<Vec<f64>>,
    pub ball_images: Vec<Vec<f64>>,
    pub ball_map: Vec<Vec<f64>>,
    /// Largest `|x_0 - |x|^2/2|` over orbit points.
    pub paraboloid_residual: f64,
    /// Largest `| |y| - 1 |` over ball images.
    pub sphere_residual: f64,
    /// Largest error of `T_{v-u}` carrying the orbit point of `u` to that of `v`.
    pub transitivity_residual: f64,
    pub group_law_residual: f64,
    pub passed: bool,
}

/// Orbit of the origin under the translation group, its ball image and the group checks.
pub fn ellipsoid_characterization_demo(n: usize, grid: &[DVector<f64>]) -> Result<EllipsoidDemoReport> {
    if n == 0 {
        return Err(Error::InvalidInput("demo needs n >= 1".into()));
    }
    if let Some(u) = grid.iter().find(|u| u.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: u.len() });
    }
    let ball_map = paraboloid_to_ball(n);
    let mut points = Vec::with_capacity(grid.len());
    let mut images = Vec::with_capacity(grid.len());
    let (mut par_res, mut sphere_res) = (0.0f64, 0.0f64);
    for u in grid {
        let x = orbit_point(u);
        let tail = x.rows(1, n);
        par_res = par_res.max((x[0] - 0.5 * tail.norm_squared()).abs());
        let mut homog = DVector::zeros(n + 2);
        homog.rows_mut(0, n + 1).copy_from(&x);
        homog[n + 1] = 1.0;
        let img = &ball_map * homog;
        let y = img.rows(0, n + 1) / img[n + 1];
        sphere_res = sphere_res.max((y.norm() - 1.0).abs());
        points.push(x.iter().copied().collect());
        images.push(y.iter().copied().collect());
    }
    let (mut trans_res, mut law_res) = (0.0f64, 0.0f64);
    for (i, u) in grid.iter().enumerate() {
        let v = &grid[(i + 1) % grid.len()];
        let carried = translation_group_element(&(v - u)).matrix * homogeneous(&orbit_point(u));
        let carried = carried.rows(0, n + 1) / carried[n + 1];
        trans_res = trans_res.max((carried - orbit_point(v)).amax());
        let product = translation_group_element(u).matrix * translation_group_element(v).matrix;
        law_res = law_res.max((product - translation_group_element(&(u + v)).matrix).amax());
    }
    let scale = grid.iter().map(|u| u.norm_squared()).fold(1.0, f64::max);
    let passed = par_res <= 1e-12 * scale && sphere_res <= 1e-9 && trans_res <= 1e-12 * scale && law_res <= 1e-12 * scale;
    Ok(EllipsoidDemoReport {
        n,
        points,
        ball_images: images,
        ball_map: ball_map.row_iter().map(|r| r.iter().copied().collect()).collect(),
        paraboloid_residual: par_res,
        sphere_residual: sphere_res,
        transitivity_residual: trans_res,
        group_law_residual: law_res,
        passed,
    })
}

fn homogeneous(x: &DVector<f64>) -> DVector<f64> {
    let mut h = DVector::zeros(x.len() + 1);
    h.rows_mut(0, x.len()).copy_from(x);
    h[x.len()] = 1.0;
    h
}

/// Horizontal coordinate of a random interior point.
fn random_base<R: Rng>(chart: &ParabolicChart, rng: &mut R) -> Result<DVector<f64>> {
    let x = chart.body.random_interior(rng, 0.1);
    let y = chart.to_chart(&x)?;
    Ok(y.rows(0, chart.dim() - 1).into_owned())
}

/// Superlevel sets of the height are convex: the midpoint of two points is at least as high as the lower one.
pub fn horoball_convexity(chart: &ParabolicChart, trials: usize, seed: u64) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("horoball_convexity", trials);
    for trial in 0..trials {
        let mut rng = sampling::shard_rng(seed, trial as u64);
        let a = chart.to_chart(&chart.body.random_interior(&mut rng, 0.05))?;
        let b = chart.to_chart(&chart.body.random_interior(&mut rng, 0.05))?;
        let (xa, xb) = (chart.from_chart(&a), chart.from_chart(&b));
        let mid = chart.from_chart(&((a + b) * 0.5));
        let floor = chart.height(&xa)?.min(chart.height(&xb)?);
        report.record(floor - chart.height(&mid)?, 1e-9);
    }
    Ok(report)
}

/// Each vertical line over `U` meets a horosphere once: heights along it increase at unit rate.
pub fn radial_injectivity(chart: &ParabolicChart, level: f64, trials: usize, seed: u64) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("radial_injectivity", trials);
    for trial in 0..trials {
        let mut rng = sampling::shard_rng(seed, trial as u64);
        let u = random_base(chart, &mut rng)?;
        let mut excess = f64::NEG_INFINITY;
        for k in 0..5 {
            let t = level * (0.5 + 0.25 * k as f64);
            let x = chart.level_point(&u, t)?;
            let y = chart.to_chart(&x)?;
            let drift = (y.rows(0, chart.dim() - 1) - &u).amax();
            excess = excess.max(drift).max((chart.height(&x)? - t).abs());
        }
        report.record(excess, 1e-9 * (1.0 + level));
    }
    Ok(report)
}

/// Distances between two vertical rays at equal heights, for doubling heights.
#[derive(Clone, Debug, Serialize)]
pub struct ContractionTrace {
    pub heights: Vec<f64>,
    pub distances: Vec<f64>,
    pub monotone: bool,
    pub final_distance: f64,
}

/// Doubles the height from 1 until the distance drops below `1e-4` or 48 steps pass.
pub fn vertical_contraction(chart: &ParabolicChart, u1: &DVector<f64>, u2: &DVector<f64>) -> Result<ContractionTrace> {
    let (mut heights, mut distances) = (Vec::new(), Vec::new());
    let mut t = 1.0;
    for _ in 0..48 {
        let d = distance_coords(&chart.body, &chart.level_point(u1, t)?, &chart.level_point(u2, t)?)?;
        heights.push(t);
        distances.push(d);
        if d < 1e-4 {
            break;
        }
        t *= 2.0;
    }
    let monotone = distances.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let final_distance = *distances.last().unwrap_or(&f64::INFINITY);
    Ok(ContractionTrace {
        heights,
        distances,
        monotone,
        final_distance,
    })
}

/// Vertical rays over random base points contract monotonically to below `1e-3`.
pub fn h7_contraction(chart: &ParabolicChart, trials: usize, seed: u64) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("h7_contraction", trials);
    for trial in 0..trials {
        let mut rng = sampling::shard_rng(seed, trial as u64);
        let u1 = random_base(chart, &mut rng)?;
        let u2 = random_base(chart, &mut rng)?;
        let trace = vertical_contraction(chart, &u1, &u2)?;
        let excess = if trace.monotone { trace.final_distance - 1e-3 } else { f64::INFINITY };
        report.record(excess, 0.0);
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct HorosphereGap {
    pub lower: f64,
    pub upper: f64,
    pub lengths: Vec<f64>,
    /// `max - min` of the vertical lengths.
    pub spread: f64,
}

/// Hilbert lengths of vertical segments from `S_lower` to `S_upper` over random base points.
pub fn horosphere_gap(chart: &ParabolicChart, lower: f64, upper: f64, count: usize, seed: u64) -> Result<HorosphereGap> {
    let mut rng = sampling::rng(seed);
    let mut lengths = Vec::with_capacity(count);
    for _ in 0..count {
        let u = random_base(chart, &mut rng)?;
        lengths.push(distance_coords(&chart.body, &chart.level_point(&u, lower)?, &chart.level_point(&u, upper)?)?);
    }
    let max = lengths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(HorosphereGap {
        lower,
        upper,
        lengths,
        spread: max - min,
    })
}

/// `height(B q) = tau(B) height(q)` on random interior points.
pub fn stabilizer_levels(chart: &ParabolicChart, b: &ProjMap, trials: usize, seed: u64) -> Result<PropertyReport> {
    let tau = chart.displacement(b)?.exp();
    let mut report = PropertyReport::new("stabilizer_levels", trials);
    for trial in 0..trials {
        let mut rng = sampling::shard_rng(seed, trial as u64);
        let q = chart.body.random_interior(&mut rng, 0.05);
        let t = chart.height(&q)?;
        let image = chart.height(&(&b.matrix * &q))?;
        report.record((image - tau * t).abs() / (1.0 + tau * t.abs()), 1e-9);
    }
    Ok(report)
}
