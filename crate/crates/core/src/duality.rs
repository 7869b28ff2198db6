//! Dual domains, the Vinberg characteristic function and the duality map.
//!
//! The characteristic function is written as an integral over the slice `D`
//! of the dual cone cut by the dual body's separating covector:
//! `f(x) = (N-1)! / |omega*| * ∫_D theta(x)^{-N} dA(theta)`, with `N = n + 1`.
//! Fixed quadrature nodes keep the approximation convex in `x`, so sublevel
//! bodies built from it are convex.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::domain::{BodyKind, ConvexBody, SublevelData};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metric::{distance_coords, properties::PropertyReport, slice_bounds};
use crate::sampling::{self, Moments};

/// Default number of quadrature nodes for bodies without a closed form.
pub const DEFAULT_QUADRATURE: usize = 4096;
const SHARD: usize = 8192;

#[derive(Clone, Debug)]
pub struct DualBody {
    pub body: ConvexBody,
    /// Name of the primal body.
    pub dual_of: String,
}

impl DualBody {
    /// Smallest normalized value `psi(v) / (|psi| |v|)` over sampled dual interior
    /// covectors `psi` and primal boundary points `v`; positive when the invariant holds.
    pub fn positivity_margin(&self, primal: &ConvexBody, samples: usize, seed: u64) -> f64 {
        let mut rng = sampling::rng(seed);
        let mut worst = f64::INFINITY;
        for _ in 0..samples {
            let psi = self.body.random_interior(&mut rng, 0.0);
            let u = primal.tangent_basis() * sampling::unit_vector(&mut rng, primal.dim);
            if let Some(v) = primal.boundary_point(&u) {
                worst = worst.min(psi.dot(&v) / (psi.norm() * v.norm()));
            }
        }
        worst
    }
}

pub fn dual_domain(body: &ConvexBody) -> Result<DualBody> {
    Ok(DualBody {
        body: dual_body(body)?,
        dual_of: body.name.clone(),
    })
}

fn dual_body(body: &ConvexBody) -> Result<ConvexBody> {
    let dual = match &body.kind {
        BodyKind::Ellipsoid { form } => {
            let inverse = form.clone().try_inverse().ok_or(Error::Singular(0.0))?;
            ConvexBody::ellipsoid(inverse, body.omega.clone())?
        }
        BodyKind::PolytopeH { facets } => {
            let vertices = polytope_vertices(facets, &body.omega);
            ConvexBody::polytope_v(facets.clone(), vertices)?
        }
        BodyKind::PolytopeV { vertices, .. } => {
            let oriented = vertices.iter().map(|v| v * body.omega.dot(v).signum()).collect();
            ConvexBody::polytope_h(oriented, Some(body.omega.clone()))?
        }
        BodyKind::Simplex => ConvexBody::simplex(body.dim)?,
        BodyKind::PosCone { m } => ConvexBody::pos_cone(*m)?,
        BodyKind::ConeJoin { base } => ConvexBody::cone_join(dual_body(base)?)?,
        BodyKind::Sublevel(_) => {
            return Err(Error::InvalidInput("no dual is available for a sublevel body".into()));
        }
    };
    Ok(dual.with_name(&format!("dual({})", body.name)))
}

/// Vertices of `{phi_i > 0}` on the side where `omega > 0`, by testing every
/// `n`-subset of facets. `None` when there are too many subsets.
pub fn polytope_vertices(facets: &[DVector<f64>], omega: &DVector<f64>) -> Option<Vec<DVector<f64>>> {
    let size = omega.len();
    let k = size - 1;
    let m = facets.len();
    if binomial(m, k) > 200_000 {
        return None;
    }
    let mut out: Vec<DVector<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let rows = DMatrix::from_rows(&idx.iter().map(|&i| facets[i].transpose()).collect::<Vec<_>>());
        let kernel = linalg::nullspace(&rows, 1e-10);
        if kernel.ncols() == 1 {
            let mut v = kernel.column(0).into_owned();
            let w = omega.dot(&v);
            if w.abs() > 1e-12 {
                v /= w;
                let feasible = facets.iter().all(|f| f.dot(&v) >= -1e-9 * v.norm());
                if feasible && !out.iter().any(|u| (u - &v).amax() < 1e-9 * v.amax().max(1.0)) {
                    out.push(v);
                }
            }
        }
        // Next k-subset in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return (out.len() >= size).then_some(out);
            }
            i -= 1;
            if idx[i] < m - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn binomial(m: usize, k: usize) -> usize {
    if k > m {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k.min(m - k) {
        acc = acc * (m - i) as u128 / (i + 1) as u128;
    }
    acc.min(usize::MAX as u128) as usize
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `x` in the open cone: interior and on the side where `omega > 0`.
fn in_cone(body: &ConvexBody, x: &DVector<f64>) -> bool {
    x.len() == body.size() && body.omega.dot(x) > 0.0 && body.is_interior(x)
}

#[derive(Clone, Debug)]
pub enum CharacteristicFunction {
    /// `prod 1 / x_i`.
    Orthant,
    /// `c (-x^T Q x)^{-N/2}`.
    Lorentz { form: DMatrix<f64>, constant: f64 },
    /// `f_base(x) / w` on `C_base x R_+`.
    Join { base: Box<CharacteristicFunction> },
    /// `sum_S |det R_S| / prod_{k in S} r_k(x)` over the cells `S` of a
    /// triangulation of the dual cone with extreme rays `r_k` (columns).
    Polyhedral { rays: DMatrix<f64>, cells: Vec<(Vec<usize>, f64)> },
    /// `weight * sum_k theta_k(x)^{-N}` over nodes `theta_k` (columns).
    Quadrature { nodes: DMatrix<f64>, weight: f64 },
}

impl CharacteristicFunction {
    /// Closed form when the kind has one, quadrature otherwise.
    pub fn new(body: &ConvexBody, quadrature: usize, seed: u64) -> Result<Self> {
        match closed_form(body) {
            Some(f) => Ok(f),
            None => Self::quadrature(body, quadrature, seed),
        }
    }

    /// Quadrature with `count` nodes drawn uniformly from the dual slice.
    pub fn quadrature(body: &ConvexBody, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidInput("need at least one quadrature node".into()));
        }
        let sampler = DualSampler::new(body)?;
        let mut rng = sampling::rng(seed);
        let mut nodes = Vec::with_capacity(count);
        let mut draws = 0usize;
        while nodes.len() < count {
            draws += 1;
            if draws > 10_000 * count {
                return Err(Error::NumericalFailure("dual slice sampling stalled".into()));
            }
            if let Some(theta) = sampler.draw(&mut rng) {
                nodes.push(theta);
            }
        }
        Ok(Self::Quadrature {
            nodes: DMatrix::from_columns(&nodes),
            weight: sampler.box_volume * sampler.scale / draws as f64,
        })
    }

    /// Number of quadrature nodes, `None` for closed forms.
    pub fn node_count(&self) -> Option<usize> {
        match self {
            Self::Quadrature { nodes, .. } => Some(nodes.ncols()),
            Self::Join { base } => base.node_count(),
            _ => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        match self {
            Self::Quadrature { .. } => false,
            Self::Join { base } => base.is_exact(),
            _ => true,
        }
    }

    /// Value at a point of the open cone; `+inf` on or outside its boundary.
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        let n = x.len() as i32;
        match self {
            Self::Orthant => {
                if x.iter().any(|v| *v <= 0.0) {
                    return f64::INFINITY;
                }
                x.iter().map(|v| 1.0 / v).product()
            }
            Self::Lorentz { form, constant } => {
                let q = -x.dot(&(form * x));
                if q <= 0.0 {
                    return f64::INFINITY;
                }
                constant * q.powf(-0.5 * n as f64)
            }
            Self::Join { base } => {
                let w = x[x.len() - 1];
                if w <= 0.0 {
                    return f64::INFINITY;
                }
                base.eval(&x.rows(0, x.len() - 1).into_owned()) / w
            }
            Self::Polyhedral { rays, cells } => {
                let values = rays.tr_mul(x);
                if values.iter().any(|v| *v <= 0.0) {
                    return f64::INFINITY;
                }
                cells
                    .iter()
                    .map(|(cell, det)| det / cell.iter().map(|&k| values[k]).product::<f64>())
                    .sum()
            }
            Self::Quadrature { nodes, weight } => {
                let values = nodes.tr_mul(x);
                if values.iter().any(|v| *v <= 0.0) {
                    return f64::INFINITY;
                }
                weight * values.iter().map(|v| v.powi(-n)).sum::<f64>()
            }
        }
    }

    /// `-grad log f`, when the closed form gives it.
    pub fn duality_point(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Self::Orthant => Some(x.map(|v| 1.0 / v)),
            Self::Lorentz { form, .. } => {
                let qx = form * x;
                Some(qx * (x.len() as f64 / x.dot(&(form * x))))
            }
            Self::Join { base } => {
                let k = x.len() - 1;
                let head = base.duality_point(&x.rows(0, k).into_owned())?;
                let mut out = DVector::zeros(k + 1);
                out.rows_mut(0, k).copy_from(&head);
                out[k] = 1.0 / x[k];
                Some(out)
            }
            Self::Polyhedral { rays, cells } => {
                let values = rays.tr_mul(x);
                if values.iter().any(|v| *v <= 0.0) {
                    return None;
                }
                let mut total = 0.0;
                let mut grad = DVector::zeros(x.len());
                for (cell, det) in cells {
                    let term = det / cell.iter().map(|&k| values[k]).product::<f64>();
                    total += term;
                    for &k in cell {
                        grad += rays.column(k) * (term / values[k]);
                    }
                }
                Some(grad / total)
            }
            Self::Quadrature { .. } => None,
        }
    }
}

/// Exact characteristic function of a polyhedral cone.
///
/// `rays` generate the dual cone and `walls` are its facet covectors, that is,
/// the generators of the primal cone. `None` if the data is degenerate.
pub fn polyhedral_charfun(rays: &[DVector<f64>], walls: &[DVector<f64>]) -> Option<CharacteristicFunction> {
    let size = rays.first()?.len();
    let tight: Vec<Vec<bool>> = walls
        .iter()
        .map(|w| rays.iter().map(|r| w.dot(r).abs() <= 1e-9 * w.norm() * r.norm()).collect())
        .collect();
    // Keep extreme rays only: those on walls of full rank.
    let extreme: Vec<usize> = (0..rays.len())
        .filter(|&k| {
            let on: Vec<_> = walls.iter().zip(&tight).filter(|(_, t)| t[k]).map(|(w, _)| w.transpose()).collect();
            !on.is_empty() && linalg::rank(&DMatrix::from_rows(&on), 1e-9) == size - 1
        })
        .collect();
    let columns: Vec<DVector<f64>> = extreme.iter().map(|&k| rays[k].clone()).collect();
    let tight: Vec<Vec<bool>> = tight.iter().map(|t| extreme.iter().map(|&k| t[k]).collect()).collect();
    let all: Vec<usize> = (0..columns.len()).collect();
    if linalg::rank(&DMatrix::from_columns(&columns), 1e-9) != size {
        return None;
    }
    let cells = pulling_triangulation(&all, size, &columns, &tight)
        .into_iter()
        .map(|cell| {
            let m = DMatrix::from_columns(&cell.iter().map(|&k| columns[k].clone()).collect::<Vec<_>>());
            let det = m.determinant().abs();
            (cell, det)
        })
        .collect();
    Some(CharacteristicFunction::Polyhedral {
        rays: DMatrix::from_columns(&columns),
        cells,
    })
}

/// Triangulates the face spanned by `face` (of dimension `dim`) by coning its
/// first ray over the triangulated facets that miss it.
fn pulling_triangulation(face: &[usize], dim: usize, rays: &[DVector<f64>], tight: &[Vec<bool>]) -> Vec<Vec<usize>> {
    if face.len() == dim {
        return vec![face.to_vec()];
    }
    let apex = face[0];
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for wall in tight {
        if wall[apex] {
            continue;
        }
        let sub: Vec<usize> = face.iter().copied().filter(|&k| wall[k]).collect();
        if sub.len() < dim - 1 || !seen.insert(sub.clone()) {
            continue;
        }
        let span = DMatrix::from_columns(&sub.iter().map(|&k| rays[k].clone()).collect::<Vec<_>>());
        if linalg::rank(&span, 1e-9) != dim - 1 {
            continue;
        }
        for mut cell in pulling_triangulation(&sub, dim - 1, rays, tight) {
            cell.push(apex);
            out.push(cell);
        }
    }
    out
}

/// Exact characteristic function for the orthant, quadric cones, polyhedral
/// cones with few enough facets, and joins of those.
pub fn closed_form(body: &ConvexBody) -> Option<CharacteristicFunction> {
    match &body.kind {
        BodyKind::Simplex => Some(CharacteristicFunction::Orthant),
        BodyKind::Ellipsoid { form } => {
            // A linear change of variables reduces to the round cone, where
            // f(e_0) = (N-1)! vol(B^{N-1}).
            let n = body.size();
            let constant = factorial(n - 1) * sampling::ball_volume(n - 1) * form.determinant().abs().sqrt();
            Some(CharacteristicFunction::Lorentz {
                form: form.clone(),
                constant,
            })
        }
        BodyKind::ConeJoin { base } => closed_form(base).map(|b| CharacteristicFunction::Join { base: Box::new(b) }),
        BodyKind::PolytopeH { facets } => {
            let vertices = polytope_vertices(facets, &body.omega)?;
            polyhedral_charfun(facets, &vertices)
        }
        BodyKind::PolytopeV { vertices, .. } => {
            let walls: Vec<_> = vertices.iter().map(|v| v * body.omega.dot(v).signum()).collect();
            let rays = polytope_vertices(&walls, &body.witness)?;
            polyhedral_charfun(&rays, &walls)
        }
        _ => None,
    }
}

/// Uniform points of the dual slice, by rejection from its bounding box.
struct DualSampler {
    dual: ConvexBody,
    lo: DVector<f64>,
    width: DVector<f64>,
    box_volume: f64,
    /// `(N-1)! / |omega*|`.
    scale: f64,
}

impl DualSampler {
    fn new(body: &ConvexBody) -> Result<Self> {
        let dual = dual_body(body)?;
        let (lo, hi) = slice_bounds(&dual, 256)?;
        let width = hi - &lo;
        let box_volume = width.iter().product();
        let scale = factorial(body.size() - 1) / dual.omega.norm();
        Ok(Self {
            dual,
            lo,
            width,
            box_volume,
            scale,
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Option<DVector<f64>> {
        let y = DVector::from_fn(self.lo.len(), |i, _| self.lo[i] + self.width[i] * rng.gen::<f64>());
        let theta = self.dual.from_slice_coords(&y);
        self.dual.is_interior(&theta).then_some(theta)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CharEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    pub rejected: usize,
    /// Exact value for the orthant, quadric cones and their joins.
    pub closed_form: Option<f64>,
}

/// Monte Carlo estimate of `f(x) = ∫_{C*} e^{-psi(x)} dpsi`: the radial integral
/// is done exactly and the slice integral by uniform sampling.
pub fn characteristic_function(body: &ConvexBody, x: &DVector<f64>, samples: usize, seed: u64) -> Result<CharEstimate> {
    if !in_cone(body, x) {
        return Err(Error::NotInCone);
    }
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let sampler = DualSampler::new(body)?;
    let n = body.size() as i32;
    let factor = sampler.box_volume * sampler.scale;
    let mut moments = Moments::default();
    let mut rejected = 0;
    for shard in 0..samples.div_ceil(SHARD) {
        let mut rng = sampling::shard_rng(seed, shard as u64);
        for _ in 0..SHARD.min(samples - shard * SHARD) {
            match sampler.draw(&mut rng) {
                Some(theta) => moments.push(factor * theta.dot(x).powi(-n)),
                None => {
                    rejected += 1;
                    moments.push(0.0);
                }
            }
        }
    }
    Ok(CharEstimate {
        estimate: moments.mean(),
        std_error: moments.std_error(),
        samples,
        rejected,
        closed_form: closed_form(body).map(|f| f.eval(x)),
    })
}

/// The point `s x` on the Vinberg hypersurface `f = t`, with `s = (f(x) / t)^{1/N}`.
pub fn vinberg_point_with(f: &CharacteristicFunction, body: &ConvexBody, x: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    if !in_cone(body, x) {
        return Err(Error::NotInCone);
    }
    if !(t > 0.0) {
        return Err(Error::InvalidInput("level must be positive".into()));
    }
    let s = (f.eval(x) / t).powf(1.0 / body.size() as f64);
    Ok(x * s)
}

pub fn vinberg_point(body: &ConvexBody, x: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    let f = CharacteristicFunction::new(body, DEFAULT_QUADRATURE, 0x71)?;
    vinberg_point_with(&f, body, x, t)
}

/// Radial projection of `{x in C : h(x) = 1, f(x) <= t}`.
///
/// `h` defaults to the body's separating covector, which gives a compact
/// shrink; a supporting covector at `p` keeps `p` in the closure.
pub fn vinberg_shrink(body: &ConvexBody, t: f64, h: Option<&DVector<f64>>, quadrature: usize) -> Result<ConvexBody> {
    let h = h.cloned().unwrap_or_else(|| body.omega.clone());
    if h.len() != body.size() {
        return Err(Error::DimensionMismatch {
            expected: body.size(),
            got: h.len(),
        });
    }
    let f = CharacteristicFunction::new(body, quadrature, 0x71)?;
    let level_at = |x: &DVector<f64>| {
        let hx = h.dot(x);
        if hx > 0.0 {
            f.eval(&(x / hx))
        } else {
            f64::INFINITY
        }
    };
    let mut rng = sampling::rng(0x5b);
    let mut best = (level_at(&body.witness), body.witness.clone());
    for _ in 0..256 {
        let x = body.random_interior(&mut rng, 0.0);
        let v = level_at(&x);
        if v < best.0 {
            best = (v, x);
        }
    }
    if !(best.0 < t * (1.0 - 1e-9)) {
        return Err(Error::EmptySlice);
    }
    let data = SublevelData {
        base: body.clone(),
        hyperplane: h,
        level: t,
        charfun: Arc::new(f),
    };
    ConvexBody::from_parts(
        BodyKind::Sublevel(Box::new(data)),
        best.1,
        body.omega.clone(),
        &format!("vinberg_shrink({})", body.name),
    )
}

pub(crate) fn sublevel_member(data: &SublevelData, x: &DVector<f64>) -> bool {
    let x = if data.base.omega.dot(x) < 0.0 { -x } else { x.clone() };
    if !data.base.is_interior(&x) {
        return false;
    }
    let hx = data.hyperplane.dot(&x);
    hx > 0.0 && data.charfun.eval(&(x / hx)) < data.level
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityMapEstimate {
    /// Centroid of `C* ∩ {psi(x) = N}` for the representative with `omega(x) = 1`.
    pub point: DVector<f64>,
    /// Largest per-coordinate standard error.
    pub std_error: f64,
    pub closed_form: Option<DVector<f64>>,
}

/// Monte Carlo centroid of the dual slice `{psi(x) = N}`: dual-slice samples
/// pushed along rays, weighted by `theta(x)^{-N}`.
pub fn duality_map(body: &ConvexBody, x: &DVector<f64>, samples: usize, seed: u64) -> Result<DualityMapEstimate> {
    let x = body.lift(x).filter(|xl| body.is_interior(xl)).ok_or(Error::NotInterior)?;
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let sampler = DualSampler::new(body)?;
    let size = body.size();
    let n = size as f64;
    let mut weights = Vec::with_capacity(samples);
    let mut values = Vec::with_capacity(samples);
    for shard in 0..samples.div_ceil(SHARD) {
        let mut rng = sampling::shard_rng(seed, shard as u64);
        for _ in 0..SHARD.min(samples - shard * SHARD) {
            if let Some(theta) = sampler.draw(&mut rng) {
                let tx = theta.dot(&x);
                weights.push(tx.powi(-(size as i32)));
                values.push(theta * (n / tx));
            }
        }
    }
    if weights.is_empty() {
        return Err(Error::NumericalFailure("no dual samples accepted".into()));
    }
    let total: f64 = weights.iter().sum();
    let point = values.iter().zip(&weights).fold(DVector::zeros(size), |acc, (v, w)| acc + v * *w) / total;
    // Delta-method error of the self-normalized mean.
    let count = weights.len() as f64;
    let mean_w = total / count;
    let mut var = DVector::zeros(size);
    for (v, w) in values.iter().zip(&weights) {
        var += (v - &point).map(|c| c * c) * (w * w);
    }
    let std_error = (var / (count * count * mean_w * mean_w)).map(f64::sqrt).max();
    Ok(DualityMapEstimate {
        point,
        std_error,
        closed_form: closed_form(body).and_then(|f| f.duality_point(&x)),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BilipschitzReport {
    pub pairs: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max(max_ratio, 1 / min_ratio)`.
    pub k_emp: f64,
}

/// Ratios `d*(Phi x, Phi y) / d(x, y)` over random pairs at distance at least `0.3`.
pub fn duality_bilipschitz(body: &ConvexBody, pairs: usize, samples: usize, seed: u64) -> Result<BilipschitzReport> {
    let dual = dual_body(body)?;
    let exact = closed_form(body);
    let mut rng = sampling::rng(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut done = 0;
    let mut attempts = 0;
    while done < pairs {
        attempts += 1;
        if attempts > 20 * pairs + 100 {
            return Err(Error::NumericalFailure("could not find well separated pairs".into()));
        }
        let x = body.random_interior(&mut rng, 0.1);
        let y = body.random_interior(&mut rng, 0.1);
        let d = distance_coords(body, &x, &y)?;
        if d < 0.3 {
            continue;
        }
        let (px, py) = match &exact {
            Some(f) => (f.duality_point(&x), f.duality_point(&y)),
            None => (None, None),
        };
        let (px, py) = match (px, py) {
            (Some(a), Some(b)) => (a, b),
            // Common random numbers keep the noise of the two centroids correlated.
            _ => (
                duality_map(body, &x, samples, seed ^ 0xd0)?.point,
                duality_map(body, &y, samples, seed ^ 0xd0)?.point,
            ),
        };
        let ratio = distance_coords(&dual, &px, &py)? / d;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        done += 1;
    }
    Ok(BilipschitzReport {
        pairs,
        min_ratio: lo,
        max_ratio: hi,
        k_emp: hi.max(1.0 / lo),
    })
}

/// Midpoints of nearby boundary points must lie strictly inside (gauge below `1 - 1e-8`).
///
/// The second direction of each pair is the first, perturbed by `spread` times a
/// Gaussian vector. With `away = Some((h, eps))`, pairs with an endpoint `b` of
/// normalized height `h(b) / (|h| |b|)` below `eps` are skipped.
pub fn flat_segment_probe(
    body: &ConvexBody,
    trials: usize,
    seed: u64,
    spread: f64,
    away: Option<(&DVector<f64>, f64)>,
) -> Result<PropertyReport> {
    let mut report = PropertyReport::new("flat_segments", trials);
    let tangent = body.tangent_basis();
    for trial in 0..trials {
        let mut rng = sampling::shard_rng(seed, trial as u64);
        let u1 = sampling::unit_vector(&mut rng, body.dim);
        let u2 = (&u1 + sampling::gaussian_vector(&mut rng, body.dim) * spread).normalize();
        let b1 = body.boundary_point(&(tangent * &u1));
        let b2 = body.boundary_point(&(tangent * &u2));
        let (Some(b1), Some(b2)) = (b1, b2) else {
            return Err(Error::NumericalFailure("unbounded slice".into()));
        };
        if let Some((h, eps)) = away {
            let low = |b: &DVector<f64>| h.dot(b) < eps * h.norm() * b.norm();
            if low(&b1) || low(&b2) {
                report.skip();
                continue;
            }
        }
        let mid = (b1 + b2) * 0.5;
        report.record(body.gauge(&mid) - (1.0 - 1e-8), 0.0);
    }
    Ok(report)
}

#[cfg(test)]
mod tests;
