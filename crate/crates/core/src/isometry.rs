//! Classification of projective isometries: elliptic, parabolic, hyperbolic.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::domain::{BodyKind, Chord, ConvexBody};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metric::{ball_point, distance_coords};
use crate::projlin::{self, Eigen, ProjMap, ProjPoint, Spectrum};
use crate::sampling;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IsometryKind {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

/// Points of `closure(Omega) ∩ P(V_λ)` found for one positive eigenvalue.
#[derive(Clone, Debug, Serialize)]
pub struct FixedSet {
    pub eigenvalue: f64,
    pub points: Vec<ProjPoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub moduli: Vec<f64>,
    pub interior_fixed_point: Option<ProjPoint>,
    pub modulus_band: f64,
    /// Unique extreme moduli, both realized by positive eigenvalues.
    pub positive_proximal: bool,
    pub spectrum: Spectrum,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsometryClassification {
    pub kind: IsometryKind,
    pub translation_length: f64,
    pub fixed_sets: Vec<FixedSet>,
    pub axis: Option<Chord>,
    pub certificate: Certificate,
}

#[derive(Clone, Copy, Debug)]
pub struct IsometryOptions {
    /// Relative band around modulus 1.
    pub modulus_band: f64,
    /// Residual allowed for a fixed point, `|Ax - λx| / (|A| |x|)`.
    pub fixed_tol: f64,
    /// Sample size for the membership check on bodies without an exact test.
    pub samples: usize,
}

impl Default for IsometryOptions {
    fn default() -> Self {
        Self {
            modulus_band: 1e-7,
            fixed_tol: 1e-9,
            samples: 64,
        }
    }
}

/// Whether `a` maps the body onto itself.
///
/// Exact for ellipsoids (congruence of the form) and polytopes given by facets
/// (facet permutation); other kinds are sampled.
pub fn preserves(body: &ConvexBody, a: &ProjMap, samples: usize) -> bool {
    if a.size() != body.size() {
        return false;
    }
    let m = &a.matrix;
    match &body.kind {
        BodyKind::Ellipsoid { form } => {
            let image = m.transpose() * form * m;
            let scale = form.norm_squared();
            let lambda = image.dot(form) / scale;
            lambda > 0.0 && (image - form * lambda).norm() <= 1e-9 * lambda * form.norm()
        }
        BodyKind::PolytopeH { facets } => facets_permuted(facets, m),
        BodyKind::Simplex => {
            let facets: Vec<DVector<f64>> = (0..body.size()).map(|i| unit(body.size(), i)).collect();
            facets_permuted(&facets, m)
        }
        BodyKind::PolytopeV { facets: Some(f), .. } => facets_permuted(f, m),
        _ => sampled_preserves(body, m, samples),
    }
}

fn unit(size: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(size);
    e[i] = 1.0;
    e
}

/// The covectors `phi ∘ A^{-1}` are the given facets up to one common sign and positive scales.
fn facets_permuted(facets: &[DVector<f64>], m: &DMatrix<f64>) -> bool {
    let Some(inv) = m.clone().try_inverse() else {
        return false;
    };
    let normalized: Vec<DVector<f64>> = facets.iter().map(|f| f.normalize()).collect();
    let mut sign = 0.0;
    let mut used = vec![false; facets.len()];
    for f in facets {
        let image = (inv.transpose() * f).normalize();
        let hit = normalized.iter().enumerate().find_map(|(j, g)| {
            if used[j] {
                return None;
            }
            if (&image - g).amax() <= 1e-9 && sign >= 0.0 {
                Some((j, 1.0))
            } else if (&image + g).amax() <= 1e-9 && sign <= 0.0 {
                Some((j, -1.0))
            } else {
                None
            }
        });
        match hit {
            Some((j, s)) => {
                used[j] = true;
                sign = s;
            }
            None => return false,
        }
    }
    true
}

fn sampled_preserves(body: &ConvexBody, m: &DMatrix<f64>, samples: usize) -> bool {
    let mut rng = sampling::rng(0x9e5);
    let tangent = body.tangent_basis();
    for _ in 0..samples.max(1) {
        let x = body.random_interior(&mut rng, 0.02);
        if !body.is_interior(&(m * &x)) {
            return false;
        }
        let u = tangent * sampling::unit_vector(&mut rng, body.dim);
        let Some(p) = body.boundary_point(&u) else {
            return false;
        };
        if (body.gauge(&(m * &p)) - 1.0).abs() > 1e-7 {
            return false;
        }
    }
    true
}

pub fn classify(body: &ConvexBody, a: &ProjMap) -> Result<IsometryClassification> {
    classify_with(body, a, &IsometryOptions::default())
}

pub fn classify_with(body: &ConvexBody, a: &ProjMap, opts: &IsometryOptions) -> Result<IsometryClassification> {
    if !preserves(body, a, opts.samples) {
        return Err(Error::NotAnIsometry);
    }
    let spectrum = projlin::spectrum(a)?;
    let moduli = spectrum.moduli();
    let max_mod = moduli.iter().copied().fold(0.0, f64::max);
    let min_mod = moduli.iter().copied().fold(f64::INFINITY, f64::min);

    let mut fixed_sets = Vec::new();
    let mut interior_fixed = None;
    for eig in positive_real(&spectrum) {
        let lambda = eig.value.re;
        let points = fixed_points(body, &a.matrix, eig, opts.fixed_tol);
        if interior_fixed.is_none() {
            interior_fixed = points
                .iter()
                .find(|p| body.is_interior(p) && displacement_ok(body, a, p))
                .map(|p| ProjPoint::new(p.clone()))
                .transpose()?;
        }
        let points = points.into_iter().map(ProjPoint::new).collect::<Result<Vec<_>>>()?;
        if !points.is_empty() {
            fixed_sets.push(FixedSet { eigenvalue: lambda, points });
        }
    }

    let off_unit = moduli.iter().any(|m| (m - 1.0).abs() > opts.modulus_band);
    let kind = if interior_fixed.is_some() {
        IsometryKind::Elliptic
    } else if off_unit {
        IsometryKind::Hyperbolic
    } else {
        IsometryKind::Parabolic
    };
    let translation_length = match kind {
        IsometryKind::Hyperbolic => (max_mod / min_mod).ln(),
        _ => 0.0,
    };
    let proximal = positive_proximal(&spectrum);
    let axis = match (kind, proximal) {
        (IsometryKind::Hyperbolic, Some((top, bottom))) => axis_chord(body, a, top, bottom, opts.fixed_tol),
        _ => None,
    };
    Ok(IsometryClassification {
        kind,
        translation_length,
        fixed_sets,
        axis,
        certificate: Certificate {
            moduli,
            interior_fixed_point: interior_fixed,
            modulus_band: opts.modulus_band,
            positive_proximal: proximal.is_some(),
            spectrum,
        },
    })
}

fn displacement_ok(body: &ConvexBody, a: &ProjMap, p: &DVector<f64>) -> bool {
    distance_coords(body, p, &(&a.matrix * p)).is_ok_and(|d| d <= 1e-8)
}

pub(crate) fn positive_real(spectrum: &Spectrum) -> impl Iterator<Item = &Eigen> {
    spectrum
        .eigenvalues
        .iter()
        .filter(|e| e.value.im.abs() <= 1e-9 * e.value.norm().max(1.0) && e.value.re > 0.0)
}

/// The positive eigenvalues of unique maximal and minimal modulus, if `A` is positive proximal.
fn positive_proximal(spectrum: &Spectrum) -> Option<(&Eigen, &Eigen)> {
    let by_modulus = |best: fn(f64, f64) -> bool| {
        let mut chosen: Option<&Eigen> = None;
        for e in &spectrum.eigenvalues {
            if chosen.is_none_or(|c| best(e.value.norm(), c.value.norm())) {
                chosen = Some(e);
            }
        }
        chosen
    };
    let top = by_modulus(|x, y| x > y)?;
    let bottom = by_modulus(|x, y| x < y)?;
    let simple_positive = |e: &Eigen| e.multiplicity == 1 && e.value.re > 0.0 && e.value.im.abs() <= 1e-9;
    let unique = |e: &Eigen| {
        spectrum
            .eigenvalues
            .iter()
            .filter(|f| (f.value.norm() - e.value.norm()).abs() <= 1e-9 * e.value.norm())
            .count()
            == 1
    };
    (simple_positive(top) && simple_positive(bottom) && unique(top) && unique(bottom) && top.value.norm() > bottom.value.norm())
        .then_some((top, bottom))
}

/// Projection of `x` onto the generalized eigenspace of `λ` along the other ones.
pub fn spectral_projection(a: &DMatrix<f64>, lambda: f64, multiplicity: usize, x: &DVector<f64>) -> Option<DVector<f64>> {
    let size = a.nrows();
    let shifted = a - DMatrix::identity(size, size) * lambda;
    let mut power = DMatrix::identity(size, size);
    for _ in 0..multiplicity {
        power = &power * &shifted;
    }
    let u = linalg::kernel_of_dim(&power, multiplicity);
    let w = linalg::range_of_dim(&power, size - multiplicity);
    let mut basis = DMatrix::zeros(size, size);
    basis.view_mut((0, 0), (size, multiplicity)).copy_from(&u);
    basis.view_mut((0, multiplicity), (size, size - multiplicity)).copy_from(&w);
    let coeffs = basis.lu().solve(x)?;
    Some(&u * coeffs.rows(0, multiplicity))
}

/// Representatives of `closure(Omega) ∩ P(V_λ)`: the limit of the witness under
/// the dynamics restricted to the generalized eigenspace, plus eigenbasis vectors.
fn fixed_points(body: &ConvexBody, a: &DMatrix<f64>, eig: &Eigen, tol: f64) -> Vec<DVector<f64>> {
    let lambda = eig.value.re;
    let size = a.nrows();
    let shifted = a - DMatrix::identity(size, size) * lambda;
    let scale = a.norm().max(1.0);
    let is_eigen = |v: &DVector<f64>| (&shifted * v).norm() <= tol * scale * v.norm();
    let mut candidates = Vec::new();
    if let Some(mut v) = spectral_projection(a, lambda, eig.multiplicity, &body.witness) {
        // Climb the Jordan chain to an honest eigenvector.
        for _ in 0..eig.multiplicity {
            if v.norm() <= 1e-12 * body.witness.norm() || is_eigen(&v) {
                break;
            }
            v = &shifted * &v;
        }
        if v.norm() > 1e-12 * body.witness.norm() {
            candidates.push(v.normalize());
        }
    }
    let basis = linalg::kernel_of_dim(&shifted, eig.blocks.len().max(1));
    if basis.ncols() > 1 {
        candidates.extend(basis.column_iter().map(|c| c.into_owned()));
    }
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in candidates {
        if !is_eigen(&v) {
            continue;
        }
        let Some(vl) = body.lift(&v) else {
            continue;
        };
        if body.gauge(&vl) <= 1.0 + 1e-7 && !out.iter().any(|w| (w - &vl).amax() <= 1e-9 * vl.amax()) {
            out.push(vl);
        }
    }
    out
}

fn axis_chord(body: &ConvexBody, a: &ProjMap, top: &Eigen, bottom: &Eigen, tol: f64) -> Option<Chord> {
    let plus = fixed_points(body, &a.matrix, top, tol).into_iter().next()?;
    let minus = fixed_points(body, &a.matrix, bottom, tol).into_iter().next()?;
    let mid = (&plus + &minus) * 0.5;
    if !body.is_interior(&mid) {
        return None;
    }
    body.chord(&ProjPoint::new(mid).ok()?, &(&plus - &minus)).ok()
}

/// `d(x, Ax)`.
pub fn displacement(body: &ConvexBody, a: &ProjMap, x: &DVector<f64>) -> Result<f64> {
    distance_coords(body, x, &(&a.matrix * x))
}

#[derive(Clone, Debug, Serialize)]
pub struct TranslationEstimate {
    pub estimate: f64,
    pub argmin: ProjPoint,
    /// Best value after each sample and after each local descent; non-increasing.
    pub history: Vec<f64>,
    pub evaluations: usize,
    /// The final descent ended on its evaluation budget instead of converging.
    pub stalled: bool,
}

/// Minimum of `d(x, Ax)` over seeded random interior points, refined by a
/// compass search in slice coordinates with `40 * samples` evaluations.
pub fn empirical_translation_length(body: &ConvexBody, a: &ProjMap, samples: usize, seed: u64) -> Result<TranslationEstimate> {
    if !preserves(body, a, 64) {
        return Err(Error::NotAnIsometry);
    }
    let samples = samples.max(1);
    let mut rng = sampling::rng(seed);
    let f = |y: &DVector<f64>| displacement(body, a, &body.from_slice_coords(y)).unwrap_or(f64::INFINITY);
    let mut evaluations = 0;
    let mut history = Vec::with_capacity(samples + 8);
    let mut starts: Vec<(f64, DVector<f64>)> = Vec::with_capacity(samples);
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let x = body.random_interior(&mut rng, 0.01);
        let y = body.slice_coords(&x).ok_or(Error::NotInterior)?;
        let v = f(&y);
        evaluations += 1;
        best = best.min(v);
        history.push(best);
        starts.push((v, y));
    }
    starts.sort_by(|p, q| p.0.total_cmp(&q.0));
    starts.truncate(4);
    let extent = slice_extent(body);
    let budget = 40 * samples;
    let per_start = budget / starts.len();
    let mut argmin = starts[0].1.clone();
    let mut stalled = false;
    for (value, start) in starts {
        let (y, v, used, converged) = compass_search(&f, start, value, 0.05 * extent, per_start, &mut rng);
        evaluations += used;
        if v < best {
            best = v;
            argmin = y;
            stalled = !converged;
        }
        history.push(best);
    }
    Ok(TranslationEstimate {
        estimate: best,
        argmin: ProjPoint::new(body.from_slice_coords(&argmin))?,
        history,
        evaluations,
        stalled,
    })
}

fn slice_extent(body: &ConvexBody) -> f64 {
    let tangent = body.tangent_basis();
    let mut total = 0.0;
    for i in 0..body.dim {
        let u = tangent.column(i).into_owned();
        if let Some((lo, hi)) = body.cone_interval(&body.witness, &u) {
            total += (hi - lo).min(1e6);
        }
    }
    total / body.dim as f64
}

/// Compass search with step growth on success; returns (point, value, evaluations, converged).
fn compass_search<R: Rng>(
    f: &impl Fn(&DVector<f64>) -> f64,
    mut y: DVector<f64>,
    mut value: f64,
    mut step: f64,
    budget: usize,
    rng: &mut R,
) -> (DVector<f64>, f64, usize, bool) {
    let n = y.len();
    let mut used = 0;
    let min_step = 1e-13 * (1.0 + y.norm());
    while used < budget {
        if step < min_step {
            return (y, value, used, true);
        }
        // A random orthonormal frame avoids getting stuck on axis-aligned ridges.
        let frame = sampling::gaussian_matrix(rng, n).qr().q();
        let mut improved = false;
        'dirs: for j in 0..n {
            for sign in [1.0, -1.0] {
                let trial = &y + frame.column(j) * (sign * step);
                let v = f(&trial);
                used += 1;
                if v < value {
                    y = trial;
                    value = v;
                    improved = true;
                    break 'dirs;
                }
            }
        }
        step = if improved { step * 2.0 } else { step * 0.5 };
    }
    (y, value, used, false)
}

#[derive(Clone, Debug, Serialize)]
pub struct JnfReport {
    /// `(eigenvalue, Jordan block sizes)` for every eigenvalue cluster.
    pub blocks: Vec<(Complex64, Vec<usize>)>,
    /// Index `i_A(1)`: largest block for the eigenvalue 1.
    pub index_at_one: usize,
    /// Largest block among all eigenvalues.
    pub max_index: usize,
    pub passes: bool,
    /// In projective dimension 2 or 3: the block structure is that of a parabolic of `O(n,1)`.
    pub lorentz_compatible: Option<bool>,
    /// In projective dimension 4, report only: compatible with `O(4,1)` or `O(2,1) ⊕ SL(2,R)`.
    pub dim4_report: Option<(bool, bool)>,
}

/// Checks the Jordan structure a parabolic of a properly convex domain must have.
pub fn parabolic_jnf_check(a: &ProjMap) -> Result<JnfReport> {
    let spectrum = projlin::spectrum(a)?;
    let worst = spectrum
        .moduli()
        .iter()
        .map(|m| (m - 1.0).abs())
        .fold(0.0, f64::max);
    if worst > 1e-7 {
        return Err(Error::NotUnitModulus(worst));
    }
    let one = Complex64::new(1.0, 0.0);
    let index_at_one = spectrum.block_size_at(one, 1e-6).unwrap_or(0);
    let max_index = spectrum.eigenvalues.iter().map(Eigen::max_block).max().unwrap_or(0);
    let passes = index_at_one == max_index && index_at_one >= 3 && index_at_one % 2 == 1;

    let mut all_blocks: Vec<usize> = spectrum.eigenvalues.iter().flat_map(|e| e.blocks.clone()).collect();
    all_blocks.sort_unstable_by(|x, y| y.cmp(x));
    let one_three_block = index_at_one == 3 && all_blocks.iter().filter(|b| **b == 3).count() == 1;
    let n = a.size() - 1;
    let lorentz_compatible = matches!(n, 2 | 3).then(|| one_three_block && all_blocks.iter().skip(1).all(|b| *b == 1));
    let dim4_report = (n == 4).then(|| {
        let o41 = one_three_block && all_blocks.iter().skip(1).all(|b| *b == 1);
        let o21_sl2 = one_three_block && all_blocks.iter().skip(1).all(|b| *b <= 2);
        (o41, o21_sl2)
    });
    Ok(JnfReport {
        blocks: spectrum.eigenvalues.iter().map(|e| (e.value, e.blocks.clone())).collect(),
        index_at_one,
        max_index,
        passes,
        lorentz_compatible,
        dim4_report,
    })
}

/// A supporting covector at the boundary fixed point `p` that is fixed by the dual action.
pub fn invariant_supporting_covector(body: &ConvexBody, a: &ProjMap, p: &DVector<f64>) -> Result<DVector<f64>> {
    let residual = |h: &DVector<f64>| {
        let image = a.matrix.transpose() * h;
        let mu = image.dot(h) / h.norm_squared();
        (image - h * mu).norm() / (h.norm() * a.matrix.norm())
    };
    let mut best: Option<(f64, DVector<f64>)> = None;
    for h in body.supporting_covectors(p, 32, 0x1b)? {
        let r = residual(&h);
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, h));
        }
    }
    // Left eigenvectors vanishing at p are the other candidates (polytope corners and the like).
    let spectrum = projlin::spectrum(a)?;
    let at = a.matrix.transpose();
    let size = a.size();
    for eig in positive_real(&spectrum) {
        let shifted = &at - DMatrix::identity(size, size) * eig.value.re;
        for h in linalg::kernel_of_dim(&shifted, eig.blocks.len().max(1)).column_iter() {
            let mut h = h.into_owned();
            if h.dot(&body.witness) < 0.0 {
                h = -h;
            }
            if h.dot(p).abs() > 1e-8 * h.norm() * p.norm() || !nonnegative_on(body, &h) {
                continue;
            }
            let w = h.dot(&body.witness);
            let h = h / w;
            let r = residual(&h);
            if best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, h));
            }
        }
    }
    match best {
        Some((r, h)) if r <= 1e-7 => Ok(h),
        _ => Err(Error::NotSupporting),
    }
}

fn nonnegative_on(body: &ConvexBody, h: &DVector<f64>) -> bool {
    let grid = sampling::direction_set(body.dim, 256, 0x77);
    let tangent = body.tangent_basis();
    grid.column_iter().all(|u| {
        body.boundary_point(&(tangent * u))
            .is_some_and(|x| h.dot(&x) >= -1e-9 * h.norm() * x.norm())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PencilKind {
    Hyperbolic,
    Parabolic,
}

/// The pencil of hyperplanes `phi_s = first - s * second` preserved by an isometry.
#[derive(Clone, Debug, Serialize)]
pub struct Pencil {
    pub kind: PencilKind,
    /// Hyperbolic: the invariant supporting covector at the attracting point.
    /// Parabolic: the second vector of the dual Jordan chain.
    pub first: DVector<f64>,
    /// Hyperbolic: the covector at the repelling point. Parabolic: the fixed supporting covector.
    pub second: DVector<f64>,
    /// Basis of the codimension-2 center.
    pub center: DMatrix<f64>,
    pub fibers: Vec<DVector<f64>>,
    /// Fixed points at the ends of the axis (hyperbolic only), as `(repelling, attracting)`.
    pub endpoints: Option<(DVector<f64>, DVector<f64>)>,
    /// Action on fiber parameters: `s(Ax) = ratio * s(x)` (hyperbolic) or `s(x) + ratio` (parabolic).
    pub ratio: f64,
}

impl Pencil {
    /// Fiber parameter of an interior point.
    pub fn parameter(&self, x: &DVector<f64>) -> f64 {
        self.first.dot(x) / self.second.dot(x)
    }

    pub fn fiber(&self, s: f64) -> DVector<f64> {
        &self.first - &self.second * s
    }

    /// Point of the axis on the fiber through `x` (hyperbolic pencils).
    pub fn project(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let (minus, plus) = self.endpoints.as_ref()?;
        // On alpha p- + beta p+, the parameter is alpha first(p-) / (beta second(p+)).
        let s = self.parameter(x);
        let beta_over_alpha = self.first.dot(minus) / (s * self.second.dot(plus));
        Some(minus + plus * beta_over_alpha)
    }
}

/// Invariant pencil of a hyperbolic or parabolic isometry.
pub fn invariant_pencil(body: &ConvexBody, a: &ProjMap) -> Result<Pencil> {
    let class = classify(body, a)?;
    match class.kind {
        IsometryKind::Hyperbolic => hyperbolic_pencil(body, a, &class),
        IsometryKind::Parabolic => parabolic_pencil(body, a),
        IsometryKind::Elliptic => Err(Error::NotHyperbolic),
    }
}

fn hyperbolic_pencil(body: &ConvexBody, a: &ProjMap, class: &IsometryClassification) -> Result<Pencil> {
    let spectrum = &class.certificate.spectrum;
    let (top, bottom) = positive_proximal(spectrum).ok_or(Error::NotHyperbolic)?;
    let plus = fixed_points(body, &a.matrix, top, 1e-9)
        .into_iter()
        .next()
        .ok_or(Error::NotHyperbolic)?;
    let minus = fixed_points(body, &a.matrix, bottom, 1e-9)
        .into_iter()
        .next()
        .ok_or(Error::NotHyperbolic)?;
    let h_plus = invariant_supporting_covector(body, a, &plus)?;
    let h_minus = invariant_supporting_covector(body, a, &minus)?;
    let (u, v) = (h_plus.normalize(), h_minus.normalize());
    if (&u - &v).amax() <= 1e-9 {
        return Err(Error::DegeneratePencil("supporting hyperplanes at the fixed points coincide".into()));
    }
    let rows = DMatrix::from_rows(&[h_plus.transpose(), h_minus.transpose()]);
    let center = linalg::kernel_of_dim(&rows, body.size() - 2);
    // With A^T h = mu h for both covectors, s(Ax) = (mu_+ / mu_-) s(x).
    let mu = |h: &DVector<f64>| (a.matrix.transpose() * h).dot(h) / h.norm_squared();
    let ratio = mu(&h_plus) / mu(&h_minus);
    let s0 = h_plus.dot(&body.witness) / h_minus.dot(&body.witness);
    let mut pencil = Pencil {
        kind: PencilKind::Hyperbolic,
        first: h_plus,
        second: h_minus,
        center,
        fibers: Vec::new(),
        endpoints: Some((minus, plus)),
        ratio,
    };
    pencil.fibers = (-8..=8).map(|k| pencil.fiber(s0 * (f64::from(k) * 0.5).exp())).collect();
    Ok(pencil)
}

fn parabolic_pencil(body: &ConvexBody, a: &ProjMap) -> Result<Pencil> {
    let report = parabolic_jnf_check(a)?;
    let k = report.index_at_one;
    let size = a.size();
    let n_mat = a.matrix.transpose() - DMatrix::identity(size, size);
    let mut power = DMatrix::identity(size, size);
    for _ in 0..k.saturating_sub(2) {
        power = &power * &n_mat;
    }
    let tol = 1e-6;
    let range = linalg::column_space(&power, tol);
    let kernel2 = linalg::nullspace(&(&n_mat * &n_mat), tol);
    let plane = linalg::intersect_subspaces(&range, &kernel2, tol);
    if plane.ncols() != 2 || k < 3 {
        return Err(Error::DegeneratePencil("dual Jordan structure is ambiguous".into()));
    }
    // The fixed covector spans N(plane); the other chain vector maps onto it.
    let fixed = linalg::column_space(&(&n_mat * &plane), tol);
    if fixed.ncols() != 1 {
        return Err(Error::DegeneratePencil("dual Jordan structure is ambiguous".into()));
    }
    let mut h = fixed.column(0).into_owned();
    if h.dot(&body.witness) < 0.0 {
        h = -h;
    }
    if !nonnegative_on(body, &h) {
        return Err(Error::DegeneratePencil("fixed covector is not supporting".into()));
    }
    let other = linalg::orthogonal_complement(&fixed, tol);
    let g = linalg::intersect_subspaces(&plane, &other, tol).column(0).into_owned();
    // A^T g = g + c h, so the parameter of Ax is that of x plus c.
    let c = (a.matrix.transpose() * &g - &g).dot(&h) / h.norm_squared();
    let center = linalg::kernel_of_dim(&DMatrix::from_rows(&[g.transpose(), h.transpose()]), size - 2);
    let s0 = g.dot(&body.witness) / h.dot(&body.witness);
    let mut pencil = Pencil {
        kind: PencilKind::Parabolic,
        first: g,
        second: h,
        center,
        fibers: Vec::new(),
        endpoints: None,
        ratio: c,
    };
    let step = c.abs().max(1e-3);
    pencil.fibers = (-8..=8).map(|k| pencil.fiber(s0 + f64::from(k) * 0.5 * step)).collect();
    Ok(pencil)
}

/// `d(x_k, A x_k)` along a ray from the witness that runs out to the boundary.
pub fn escaping_displacements(body: &ConvexBody, a: &ProjMap, direction: &DVector<f64>, steps: usize) -> Result<Vec<f64>> {
    let d = body.tangent_basis() * direction;
    (1..=steps)
        .map(|k| {
            let x = ball_point(body, &body.witness, &d, k as f64)?;
            displacement(body, a, &x)
        })
        .collect()
}
