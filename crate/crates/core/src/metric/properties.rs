//! Randomized probes of metric convexity properties of a body.

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use super::{ball_point, distance_coords};
use crate::domain::ConvexBody;
use crate::error::{Error, Result};
use crate::sampling;

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    /// Trials excluded by the probe's own filter.
    pub skipped: usize,
    /// Largest violation seen (negative when every check held with room to spare).
    pub worst_excess: f64,
}

impl PropertyReport {
    pub(crate) fn new(name: &str, trials: usize) -> Self {
        Self {
            name: name.to_string(),
            trials,
            failures: 0,
            skipped: 0,
            worst_excess: f64::NEG_INFINITY,
        }
    }

    pub(crate) fn skip(&mut self) {
        self.skipped += 1;
    }

    /// Records one trial whose largest excess over the allowed bound is `excess`.
    pub(crate) fn record(&mut self, excess: f64, tol: f64) {
        self.worst_excess = self.worst_excess.max(excess);
        if excess > tol {
            self.failures += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

const GRID: usize = 33;

/// Minimizes `f` over `[lo, hi]`: grid search, then golden section around the best node.
fn minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let step = (hi - lo) / (GRID - 1) as f64;
    let values: Vec<f64> = (0..GRID).map(|i| f(lo + step * i as f64)).collect();
    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
    let mut a = lo + step * best.saturating_sub(1) as f64;
    let mut b = (lo + step * (best + 1) as f64).min(hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    values[best].min(fc).min(fd)
}

fn dist_or_inf(body: &ConvexBody, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    distance_coords(body, x, y).unwrap_or(f64::INFINITY)
}

fn lerp(p: &DVector<f64>, q: &DVector<f64>, t: f64) -> DVector<f64> {
    p + (q - p) * t
}

/// Distance from `x` to the closed segment `[p, q]` of slice points.
pub fn distance_to_segment(body: &ConvexBody, x: &DVector<f64>, p: &DVector<f64>, q: &DVector<f64>) -> Result<f64> {
    let (p, q) = (lift(body, p)?, lift(body, q)?);
    let best = minimize(|t| dist_or_inf(body, x, &lerp(&p, &q, t)), 0.0, 1.0);
    best.is_finite().then_some(best).ok_or(Error::NotInterior)
}

/// Distance from `x` to the open chord with boundary endpoints `p` and `q`.
pub fn distance_to_line(body: &ConvexBody, x: &DVector<f64>, p: &DVector<f64>, q: &DVector<f64>) -> Result<f64> {
    let (p, q) = (lift(body, p)?, lift(body, q)?);
    let logistic = |u: f64| 1.0 / (1.0 + (-u).exp());
    let best = minimize(|u| dist_or_inf(body, x, &lerp(&p, &q, logistic(u))), -30.0, 30.0);
    best.is_finite().then_some(best).ok_or(Error::NotInterior)
}

fn lift(body: &ConvexBody, x: &DVector<f64>) -> Result<DVector<f64>> {
    body.lift(x).ok_or(Error::NotInterior)
}

fn random_direction<R: Rng>(body: &ConvexBody, rng: &mut R) -> DVector<f64> {
    body.tangent_basis() * sampling::unit_vector(rng, body.dim)
}

fn random_point<R: Rng>(body: &ConvexBody, rng: &mut R) -> DVector<f64> {
    body.random_interior(rng, 0.05)
}

/// Midpoints of boundary points of random balls stay within the radius.
pub fn convex_balls(body: &ConvexBody, trials: usize, seed: u64) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("convex_balls", trials);
    for trial in 0..trials {
        let mut rng = sampling::shard_rng(seed, trial as u64);
        let center = random_point(body, &mut rng);
        let r = rng.gen_range(0.2..2.5);
        let sphere: Vec<DVector<f64>> = (0..16)
            .map(|_| ball_point(body, &center, &random_direction(body, &mut rng), r))
            .collect::<Result<_>>()?;
        let mut excess = f64::NEG_INFINITY;
        for _ in 0..8 {
            let i = rng.gen_range(0..sphere.len());
            let j = rng.gen_range(0..sphere.len());
            let mid = lerp(&sphere[i], &sphere[j], 0.5);
            excess = excess.max(distance_coords(body, &center, &mid)? - r);
        }
        report.record(excess, 1e-8);
    }
    Ok(report)
}

/// With `d(a, b) = d(c, d) = R`, every point of `[a, c]` is within `R` of `[b, d]`.
pub fn four_points(body: &ConvexBody, trials: usize, seed: u64) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("four_points", trials);
    for trial in 0..trials {
        let mut rng = sampling::shard_rng(seed, trial as u64);
        let a = random_point(body, &mut rng);
        let c = random_point(body, &mut rng);
        let r = rng.gen_range(0.2..2.0);
        let b = ball_point(body, &a, &random_direction(body, &mut rng), r)?;
        let d = ball_point(body, &c, &random_direction(body, &mut rng), r)?;
        let mut excess = f64::NEG_INFINITY;
        for k in 1..10 {
            let z = lerp(&a, &c, k as f64 / 10.0);
            excess = excess.max(distance_to_segment(body, &z, &b, &d)? - r);
        }
        report.record(excess, 1e-6);
    }
    Ok(report)
}

/// Distance to a segment `C`, restricted to a segment `K`, peaks at an endpoint of `K`.
pub fn maximum_principle(body: &ConvexBody, trials: usize, seed: u64) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("maximum_principle", trials);
    for trial in 0..trials {
        let mut rng = sampling::shard_rng(seed, trial as u64);
        let (u, w) = (random_point(body, &mut rng), random_point(body, &mut rng));
        let (p, q) = (random_point(body, &mut rng), random_point(body, &mut rng));
        let (u, w) = (lift(body, &u)?, lift(body, &w)?);
        let bound = distance_to_segment(body, &u, &p, &q)?.max(distance_to_segment(body, &w, &p, &q)?);
        let mut excess = f64::NEG_INFINITY;
        for k in 1..10 {
            let z = lerp(&u, &w, k as f64 / 10.0);
            excess = excess.max(distance_to_segment(body, &z, &p, &q)? - bound);
        }
        report.record(excess, 1e-6);
    }
    Ok(report)
}

/// Midpoints of points in the `r`-neighborhood of a segment stay in it.
pub fn neighborhood_convexity(body: &ConvexBody, trials: usize, seed: u64) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("neighborhood_convexity", trials);
    for trial in 0..trials {
        let mut rng = sampling::shard_rng(seed, trial as u64);
        let (p, q) = (random_point(body, &mut rng), random_point(body, &mut rng));
        let r = rng.gen_range(0.2..1.5);
        let cloud: Vec<DVector<f64>> = (0..12)
            .map(|_| {
                let foot = lerp(&p, &q, rng.gen::<f64>());
                let rho = r * rng.gen::<f64>().max(1e-3);
                ball_point(body, &foot, &random_direction(body, &mut rng), rho)
            })
            .collect::<Result<_>>()?;
        let mut excess = f64::NEG_INFINITY;
        for _ in 0..6 {
            let i = rng.gen_range(0..cloud.len());
            let j = rng.gen_range(0..cloud.len());
            let mid = lerp(&cloud[i], &cloud[j], 0.5);
            excess = excess.max(distance_to_segment(body, &mid, &p, &q)? - r);
        }
        report.record(excess, 1e-6);
    }
    Ok(report)
}

/// Two lines from a common boundary point `p`: the distance from a point of one
/// line to the other grows as the point moves away from `p`, and falls toward
/// zero near `p`.
///
/// A trial fails on a decrease larger than `1e-9`, or when the distance at
/// arclength 8 toward `p` is not below half the distance at the start.
pub fn diverging_lines(body: &ConvexBody, trials: usize, seed: u64) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("diverging_lines", trials);
    let steps: Vec<f64> = (-8..=3).map(f64::from).collect();
    for trial in 0..trials {
        let mut rng = sampling::shard_rng(seed, trial as u64);
        let p = body
            .boundary_point(&random_direction(body, &mut rng))
            .ok_or_else(|| Error::NumericalFailure("unbounded slice".into()))?;
        let (m1, m2) = (random_point(body, &mut rng), random_point(body, &mut rng));
        let (m1, m2) = (lift(body, &m1)?, lift(body, &m2)?);
        let toward_p = &p - &m1;
        let other = &m2 - &p;
        let (_, hi) = body
            .cone_interval(&m2, &other)
            .ok_or(Error::NotInterior)?;
        let q2 = &m2 + &other * hi;
        let mut values = Vec::with_capacity(steps.len());
        for s in &steps {
            let x = if *s < 0.0 {
                ball_point(body, &m1, &toward_p, -s)?
            } else if *s > 0.0 {
                ball_point(body, &m1, &-&toward_p, *s)?
            } else {
                m1.clone()
            };
            values.push(distance_to_line(body, &x, &p, &q2)?);
        }
        let drop = values.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
        let start = values[steps.iter().position(|s| *s == 0.0).unwrap_or(0)];
        let decay = values[0] - 0.5 * start;
        report.worst_excess = report.worst_excess.max(drop);
        if drop > 1e-9 || decay > 0.0 {
            report.failures += 1;
        }
    }
    Ok(report)
}

/// Runs every probe with `trials` trials each.
pub fn run_all(body: &ConvexBody, trials: usize, seed: u64) -> Result<Vec<PropertyReport>> {
    Ok(vec![
        convex_balls(body, trials, seed)?,
        four_points(body, trials, seed ^ 0x4)?,
        maximum_principle(body, trials, seed ^ 0x3)?,
        neighborhood_convexity(body, trials, seed ^ 0x2)?,
        diverging_lines(body, trials, seed ^ 0x1)?,
    ])
}
