//! Finitely generated groups of projective maps acting on a body.
//!
//! Everything is computed on a finite word ball, so injectivity radii are
//! upper bounds and subgroups are lower approximations, both at the cutoff.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ConvexBody, Location};
use crate::error::{Error, Result};
use crate::isometry::{self, IsometryKind};
use crate::metric::properties::PropertyReport;
use crate::metric::{distance_coords, slice_bounds};
use crate::projlin::{self, ProjMap, ProjPoint};
use crate::{horocusp, linalg, sampling};

/// Matrices closer than this (relative to their size) are the same element.
pub const DEDUP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BallOptions {
    pub max_length: usize,
    pub max_elements: usize,
}

impl Default for BallOptions {
    fn default() -> Self {
        Self {
            max_length: 8,
            max_elements: 200_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupElement {
    pub map: ProjMap,
    pub length: usize,
    /// Letters `±(i + 1)` for generator `i` and its inverse.
    pub word: Vec<i32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupBall {
    pub generators: Vec<ProjMap>,
    pub elements: Vec<GroupElement>,
    pub cutoff: usize,
}

/// Group JSON: `{"generators": [matrix, ...]}` with matrices as row lists.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupSpec {
    pub generators: Vec<Vec<Vec<f64>>>,
}

impl GroupSpec {
    pub fn maps(&self) -> Result<Vec<ProjMap>> {
        self.generators.iter().map(|rows| ProjMap::from_rows(rows)).collect()
    }
}

/// Total order on `f64` keys for the dedup index.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
struct Key(f64);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Finds matrices equal up to sign and `DEDUP_TOL` via a scalar projection index.
struct DedupIndex {
    weights: DMatrix<f64>,
    index: BTreeMap<Key, Vec<usize>>,
    canon: Vec<DMatrix<f64>>,
}

impl DedupIndex {
    fn new(size: usize) -> Self {
        let weights = DMatrix::from_fn(size, size, |i, j| 1.0 + ((i * size + j) as f64 * 0.618_033_988_75).fract());
        Self {
            weights,
            index: BTreeMap::new(),
            canon: Vec::new(),
        }
    }

    fn tol(m: &DMatrix<f64>) -> f64 {
        DEDUP_TOL * m.amax().max(1.0)
    }

    fn find(&self, m: &DMatrix<f64>) -> Option<usize> {
        self.find_signed(m).or_else(|| self.find_signed(&-m))
    }

    fn find_signed(&self, m: &DMatrix<f64>) -> Option<usize> {
        let key = self.weights.dot(m);
        let slack = Self::tol(m) * self.weights.sum();
        self.index
            .range(Key(key - slack)..=Key(key + slack))
            .flat_map(|(_, ids)| ids.iter().copied())
            .find(|&id| (&self.canon[id] - m).amax() < Self::tol(m))
    }

    /// Inserts `m` unless present; returns whether it was new.
    fn insert(&mut self, m: DMatrix<f64>) -> bool {
        if self.find(&m).is_some() {
            return false;
        }
        let key = self.weights.dot(&m);
        self.index.entry(Key(key)).or_default().push(self.canon.len());
        self.canon.push(m);
        true
    }
}

/// All products of at most `length` generators and inverses, deduplicated.
pub fn enumerate_ball(generators: &[ProjMap], length: usize) -> Result<GroupBall> {
    enumerate_ball_with(generators, length, &BallOptions::default())
}

pub fn enumerate_ball_with(generators: &[ProjMap], length: usize, opts: &BallOptions) -> Result<GroupBall> {
    let Some(first) = generators.first() else {
        return Err(Error::InvalidInput("need at least one generator".into()));
    };
    let size = first.size();
    if generators.iter().any(|g| g.size() != size) {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: generators.iter().map(ProjMap::size).find(|s| *s != size).unwrap_or(size),
        });
    }
    if length > opts.max_length {
        return Err(Error::InvalidInput(format!(
            "word length {length} exceeds the configured maximum {}",
            opts.max_length
        )));
    }
    let mut letters = Vec::with_capacity(2 * generators.len());
    for (i, g) in generators.iter().enumerate() {
        letters.push((i as i32 + 1, g.clone()));
        letters.push((-(i as i32) - 1, g.inverse()));
    }
    let mut index = DedupIndex::new(size);
    let identity = ProjMap::identity(size);
    index.insert(identity.matrix.clone());
    let mut elements = vec![GroupElement {
        map: identity,
        length: 0,
        word: Vec::new(),
    }];
    let mut frontier = vec![0usize];
    for len in 1..=length {
        let mut next = Vec::new();
        for &id in &frontier {
            for (letter, g) in &letters {
                let parent = &elements[id];
                if parent.word.last() == Some(&-letter) {
                    continue;
                }
                let map = parent.map.compose(g);
                if !index.insert(map.matrix.clone()) {
                    continue;
                }
                let mut word = parent.word.clone();
                word.push(*letter);
                next.push(elements.len());
                elements.push(GroupElement { map, length: len, word });
                if elements.len() > opts.max_elements {
                    return Err(Error::ExplosionGuard(elements.len()));
                }
            }
        }
        frontier = next;
    }
    Ok(GroupBall {
        generators: generators.to_vec(),
        elements,
        cutoff: length,
    })
}

impl GroupBall {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Elements other than the identity.
    pub fn nontrivial(&self) -> impl Iterator<Item = &GroupElement> {
        let size = self.elements.first().map_or(0, |e| e.map.size());
        let identity = ProjMap::identity(size);
        self.elements
            .iter()
            .filter(move |e| e.map.projective_distance(&identity) >= DedupIndex::tol(&e.map.matrix))
    }

    /// Index of the element equal to `m` up to the dedup tolerance.
    pub fn position(&self, m: &ProjMap) -> Option<usize> {
        let tol = DedupIndex::tol(&m.matrix);
        self.elements.iter().position(|e| e.map.projective_distance(m) < tol)
    }
}

fn check_isometries(body: &ConvexBody, maps: &[ProjMap]) -> Result<()> {
    if maps.iter().all(|g| isometry::preserves(body, g, 64)) {
        Ok(())
    } else {
        Err(Error::NotAnIsometry)
    }
}

fn interior_coords(body: &ConvexBody, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != body.size() {
        return Err(Error::DimensionMismatch {
            expected: body.size(),
            got: x.len(),
        });
    }
    let xl = body.lift(x).ok_or(Error::NotInterior)?;
    if !body.is_interior(&xl) {
        return Err(Error::NotInterior);
    }
    Ok(xl)
}

/// Smallest displacement of `x` over the nontrivial elements, with the element.
fn shortest<'a>(body: &ConvexBody, ball: &'a GroupBall, x: &DVector<f64>) -> Result<Option<(f64, &'a GroupElement)>> {
    let mut best: Option<(f64, &GroupElement)> = None;
    for e in ball.nontrivial() {
        let d = isometry::displacement(body, &e.map, x)?;
        if best.is_none_or(|(b, _)| d < b) {
            best = Some((d, e));
        }
    }
    Ok(best)
}

/// Half the smallest displacement of `x` by a nontrivial element of the ball.
///
/// An upper bound for the injectivity radius at the image of `x`, valid up to
/// the word-length cutoff. `+inf` for the trivial group.
pub fn injectivity_radius_estimate(body: &ConvexBody, ball: &GroupBall, x: &DVector<f64>) -> Result<f64> {
    check_isometries(body, &ball.generators)?;
    let x = interior_coords(body, x)?;
    Ok(shortest(body, ball, &x)?.map_or(f64::INFINITY, |(d, _)| 0.5 * d))
}

#[derive(Clone, Debug, Serialize)]
pub struct ShortSubgroup {
    /// Elements of the ball moving `x` less than `mu`.
    pub short: Vec<GroupElement>,
    /// Ball elements reached by products of short elements, within the cutoff.
    pub closure: Vec<GroupElement>,
    pub kinds: Vec<IsometryKind>,
    pub cutoff: usize,
    pub mu: f64,
    /// No hyperbolic found: a cusp-group candidate when nontrivial.
    pub all_nonhyperbolic: bool,
}

impl ShortSubgroup {
    pub fn is_trivial(&self) -> bool {
        self.short.is_empty()
    }
}

/// The elements of the ball moving `x` less than `mu`, closed up inside the ball.
pub fn short_subgroup(body: &ConvexBody, ball: &GroupBall, x: &DVector<f64>, mu: f64) -> Result<ShortSubgroup> {
    let x = interior_coords(body, x)?;
    let mut short = Vec::new();
    for e in ball.nontrivial() {
        if isometry::displacement(body, &e.map, &x)? < mu {
            short.push(e.clone());
        }
    }
    let size = body.size();
    let mut members = DedupIndex::new(size);
    let mut closure = vec![GroupElement {
        map: ProjMap::identity(size),
        length: 0,
        word: Vec::new(),
    }];
    members.insert(closure[0].map.matrix.clone());
    let mut frontier = vec![0usize];
    for _ in 0..ball.cutoff {
        let mut next = Vec::new();
        for &id in &frontier {
            for s in &short {
                let product = closure[id].map.compose(&s.map);
                let Some(pos) = ball.position(&product) else {
                    continue;
                };
                if members.insert(product.matrix.clone()) {
                    next.push(closure.len());
                    closure.push(ball.elements[pos].clone());
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    let mut kinds = Vec::with_capacity(closure.len());
    for e in closure.iter().skip(1) {
        kinds.push(isometry::classify(body, &e.map)?.kind);
    }
    let all_nonhyperbolic = kinds.iter().all(|k| *k != IsometryKind::Hyperbolic);
    Ok(ShortSubgroup {
        short,
        closure,
        kinds,
        cutoff: ball.cutoff,
        mu,
        all_nonhyperbolic,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointCertificate {
    pub point: ProjPoint,
    pub location: Location,
    /// Shared invariant supporting covector at a boundary fixed point.
    pub covector: Option<DVector<f64>>,
    pub doubly_elementary: bool,
}

/// Shared eigenspaces for positive eigenvalues of every matrix.
fn common_eigenspaces(matrices: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let size = matrices[0].nrows();
    let mut spaces = vec![DMatrix::identity(size, size)];
    for m in matrices {
        let map = ProjMap::new(m.clone())?;
        let spectrum = projlin::spectrum(&map)?;
        let mut next = Vec::new();
        for eig in isometry::positive_real(&spectrum) {
            let shifted = &map.matrix - DMatrix::identity(size, size) * eig.value.re;
            let kernel = linalg::kernel_of_dim(&shifted, eig.blocks.len().max(1));
            for s in &spaces {
                let common = linalg::intersect_subspaces(s, &kernel, 1e-7);
                if common.ncols() > 0 {
                    next.push(common);
                }
            }
        }
        spaces = next;
        if spaces.is_empty() {
            break;
        }
    }
    Ok(spaces)
}

/// A point of `span` in the closure of the body, preferring interior points.
fn closure_point(body: &ConvexBody, span: &DMatrix<f64>) -> Option<DVector<f64>> {
    let orient = |v: DVector<f64>| if body.omega.dot(&v) < 0.0 { -v } else { v };
    let near_closure = |v: &DVector<f64>| body.locate_with_tol(v, 1e-8) != Location::Exterior;
    if span.ncols() == 1 {
        let v = orient(span.column(0).into_owned());
        return near_closure(&v).then_some(v);
    }
    let projected = span * (span.transpose() * &body.witness);
    if body.is_interior(&projected) {
        return Some(projected);
    }
    let mut rng = sampling::rng(0x9f);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for _ in 0..512 {
        let v = orient(span * sampling::unit_vector(&mut rng, span.ncols()));
        let g = body.gauge(&v);
        if best.as_ref().is_none_or(|(b, _)| g < *b) {
            best = Some((g, v));
        }
    }
    best.filter(|(g, _)| *g <= 1.0 + 1e-8).map(|(_, v)| v)
}

/// A point of the closure fixed by every map and, at a boundary point, a
/// supporting covector fixed by every dual map. A heuristic search:
/// `NoneFound` does not refute elementarity.
pub fn common_fixed_point(body: &ConvexBody, maps: &[ProjMap]) -> Result<FixedPointCertificate> {
    if maps.is_empty() {
        return Err(Error::InvalidInput("need at least one map".into()));
    }
    check_isometries(body, maps)?;
    let matrices: Vec<_> = maps.iter().map(|m| m.matrix.clone()).collect();
    let mut found: Vec<DVector<f64>> = common_eigenspaces(&matrices)?
        .iter()
        .filter_map(|s| closure_point(body, s))
        .collect();
    found.sort_by_key(|p| body.locate_with_tol(p, 1e-8) != Location::Interior);
    let Some(p) = found.into_iter().next() else {
        return Err(Error::NoneFound);
    };
    let location = body.locate_with_tol(&p, 1e-8);
    let point = ProjPoint::new(p.clone())?;
    if location == Location::Interior {
        return Ok(FixedPointCertificate {
            point,
            location,
            covector: None,
            doubly_elementary: false,
        });
    }
    let duals: Vec<_> = maps.iter().map(|m| m.matrix.transpose()).collect();
    let covector = common_eigenspaces(&duals)?.into_iter().find_map(|s| {
        // Restrict to covectors vanishing at p, then test support.
        let row = (s.transpose() * &p).transpose();
        let annihilator = linalg::nullspace(&DMatrix::from_row_slice(1, s.ncols(), row.as_slice()), 1e-9);
        let restricted = &s * annihilator;
        restricted.column_iter().find_map(|h| {
            let mut h = h.into_owned();
            if h.dot(&body.witness) < 0.0 {
                h = -h;
            }
            let h = h.normalize();
            horocusp::supports(body, &h, &p).then_some(h)
        })
    });
    Ok(FixedPointCertificate {
        point,
        location,
        doubly_elementary: covector.is_some(),
        covector,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmallDisplacement {
    pub point: DVector<f64>,
    pub displacements: Vec<f64>,
    pub steps: usize,
}

/// A point moved less than `eps` by every map, found by marching from the
/// witness toward a common fixed point.
pub fn small_displacement_point(body: &ConvexBody, maps: &[ProjMap], eps: f64, budget: usize) -> Result<SmallDisplacement> {
    for m in maps {
        if isometry::classify(body, m)?.kind == IsometryKind::Hyperbolic {
            return Err(Error::HyperbolicPresent);
        }
    }
    let cert = common_fixed_point(body, maps)?;
    let target = body.lift(&cert.point.coords).ok_or(Error::NoneFound)?;
    let measure = |x: &DVector<f64>| -> Result<Vec<f64>> { maps.iter().map(|m| isometry::displacement(body, m, x)).collect() };
    if cert.location == Location::Interior {
        let displacements = measure(&target)?;
        return Ok(SmallDisplacement {
            point: target,
            displacements,
            steps: 0,
        });
    }
    let direction = &target - &body.witness;
    for step in 1..=budget {
        let s = 1.0 - 0.5f64.powi(step as i32);
        let x = &body.witness + &direction * s;
        if !body.is_interior(&x) {
            break;
        }
        let displacements = measure(&x)?;
        if displacements.iter().all(|d| *d < eps) {
            return Ok(SmallDisplacement {
                point: x,
                displacements,
                steps: step,
            });
        }
    }
    Err(Error::BudgetExhausted)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThinPoint {
    pub point: DVector<f64>,
    pub inj_estimate: f64,
    pub thin: bool,
    /// Kind of the element realizing the smallest displacement.
    pub witness_kind: Option<IsometryKind>,
}

/// Injectivity estimate, thin flag and witness kind at each grid point.
pub fn thin_part_sample(body: &ConvexBody, ball: &GroupBall, eps: f64, grid: &[DVector<f64>]) -> Result<Vec<ThinPoint>> {
    check_isometries(body, &ball.generators)?;
    let mut kinds: Vec<Option<IsometryKind>> = vec![None; ball.len()];
    let mut out = Vec::with_capacity(grid.len());
    for x in grid {
        let x = interior_coords(body, x)?;
        let best = shortest(body, ball, &x)?;
        let (inj, witness_kind) = match best {
            None => (f64::INFINITY, None),
            Some((d, e)) => {
                let pos = ball.position(&e.map).expect("element comes from the ball");
                if kinds[pos].is_none() {
                    kinds[pos] = Some(isometry::classify(body, &e.map)?.kind);
                }
                (0.5 * d, kinds[pos])
            }
        };
        out.push(ThinPoint {
            point: x,
            inj_estimate: inj,
            thin: inj < eps,
            witness_kind,
        });
    }
    Ok(out)
}

/// Interior points of a `per_axis^n` grid over the slice bounding box, kept
/// at gauge below `1 - margin`.
pub fn slice_grid(body: &ConvexBody, per_axis: usize, margin: f64) -> Result<Vec<DVector<f64>>> {
    if per_axis < 2 {
        return Err(Error::InvalidInput("grid needs at least 2 points per axis".into()));
    }
    let (lo, hi) = slice_bounds(body, 256)?;
    let n = body.dim;
    let total = per_axis.checked_pow(n as u32).ok_or_else(|| Error::InvalidInput("grid is too large".into()))?;
    let mut out = Vec::new();
    for flat in 0..total {
        let mut rest = flat;
        let y = DVector::from_fn(n, |i, _| {
            let k = rest % per_axis;
            rest /= per_axis;
            lo[i] + (hi[i] - lo[i]) * k as f64 / (per_axis - 1) as f64
        });
        let x = body.from_slice_coords(&y);
        if body.gauge(&x) < 1.0 - margin {
            out.push(x);
        }
    }
    Ok(out)
}

/// CSV with columns `x0..x{N-1}, inj_estimate, thin_flag, witness_kind`.
pub fn thin_part_csv(points: &[ThinPoint]) -> String {
    let size = points.first().map_or(0, |p| p.point.len());
    let mut out: Vec<String> = (0..size).map(|i| format!("x{i}")).collect();
    out.extend(["inj_estimate", "thin_flag", "witness_kind"].map(String::from));
    let mut csv = out.join(",") + "\n";
    for p in points {
        let mut row: Vec<String> = p.point.iter().map(|c| format!("{c:.12e}")).collect();
        row.push(format!("{:.12e}", p.inj_estimate));
        row.push(p.thin.to_string());
        row.push(match p.witness_kind {
            Some(IsometryKind::Elliptic) => "elliptic".into(),
            Some(IsometryKind::Parabolic) => "parabolic".into(),
            Some(IsometryKind::Hyperbolic) => "hyperbolic".into(),
            None => "none".into(),
        });
        csv += &(row.join(",") + "\n");
    }
    csv
}

/// Convex combinations of points each moved at most `R` by `gamma` are moved
/// at most `3^n R`, up to `1e-6`.
pub fn hull_displacement_probe(
    body: &ConvexBody,
    gamma: &ProjMap,
    points: &[DVector<f64>],
    trials: usize,
    seed: u64,
) -> Result<PropertyReport> {
    let lifted: Vec<_> = points.iter().map(|x| interior_coords(body, x)).collect::<Result<_>>()?;
    let radius = lifted
        .iter()
        .map(|x| isometry::displacement(body, gamma, x))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let bound = 3f64.powi(body.dim as i32) * radius;
    let mut report = PropertyReport::new("hull_displacement", trials);
    let mut rng = sampling::rng(seed);
    for _ in 0..trials {
        let weights: Vec<f64> = lifted.iter().map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
        let total: f64 = weights.iter().sum();
        let y = lifted.iter().zip(&weights).fold(DVector::zeros(body.size()), |acc, (x, w)| acc + x * (w / total));
        report.record(isometry::displacement(body, gamma, &y)? - bound, 1e-6);
    }
    Ok(report)
}

/// Largest matrix entry among ball elements moving `x` at most `d`.
pub fn isometry_entry_bound(body: &ConvexBody, ball: &GroupBall, x: &DVector<f64>, d: f64) -> Result<f64> {
    let x = interior_coords(body, x)?;
    let mut bound = 0.0f64;
    for e in &ball.elements {
        if isometry::displacement(body, &e.map, &x)? <= d {
            bound = bound.max(e.map.matrix.amax());
        }
    }
    Ok(bound)
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayProfile {
    /// `(distance from the first point, injectivity estimate)` along the path.
    pub samples: Vec<(f64, f64)>,
    /// Largest drop of `log inj` per unit distance between consecutive samples.
    pub max_slope: f64,
}

/// Injectivity estimates along a path of interior points.
pub fn injectivity_decay(body: &ConvexBody, ball: &GroupBall, path: &[DVector<f64>]) -> Result<DecayProfile> {
    let Some(start) = path.first() else {
        return Err(Error::InvalidInput("empty path".into()));
    };
    let mut samples = Vec::with_capacity(path.len());
    for x in path {
        let inj = injectivity_radius_estimate(body, ball, x)?;
        samples.push((distance_coords(body, start, x)?, inj));
    }
    let max_slope = samples
        .windows(2)
        .filter(|w| (w[1].0 - w[0].0).abs() > 1e-12)
        .map(|w| (w[0].1.ln() - w[1].1.ln()) / (w[1].0 - w[0].0).abs())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayProfile { samples, max_slope })
}

/// Image of `g` in `SO(2,1)` acting on `[[w + x, y], [y, w - x]] -> g X g^T`,
/// in coordinates `(x, y, w)` where the invariant cone is the Klein ball.
pub fn sl2_to_so21(g: &DMatrix<f64>) -> Result<ProjMap> {
    if g.shape() != (2, 2) {
        return Err(Error::InvalidInput("expected a 2x2 matrix".into()));
    }
    let basis = [
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        DMatrix::identity(2, 2),
    ];
    let columns: Vec<DVector<f64>> = basis
        .iter()
        .map(|b| {
            let image = g * b * g.transpose();
            DVector::from_vec(vec![
                0.5 * (image[(0, 0)] - image[(1, 1)]),
                image[(0, 1)],
                0.5 * (image[(0, 0)] + image[(1, 1)]),
            ])
        })
        .collect();
    ProjMap::new(DMatrix::from_columns(&columns))
}

/// The modular group `PSL(2, Z)` as generated by `S` and `T`, acting on `klein_ball(2)`.
pub fn modular_generators() -> Vec<ProjMap> {
    let s = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let t = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    vec![
        sl2_to_so21(&s).expect("S is invertible"),
        sl2_to_so21(&t).expect("T is invertible"),
    ]
}
