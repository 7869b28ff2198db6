//! Projective linear algebra: points, hyperplanes, maps, cross ratios and
//! Jordan-structure data of matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// A point of the sphere `S^n` (or of `P^n`, when the sign is ignored) in
/// homogeneous coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjPoint {
    pub coords: DVector<f64>,
    pub lift_sign: i8,
}

impl ProjPoint {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        if coords.norm() == 0.0 {
            return Err(Error::InvalidInput("zero vector is not a point".into()));
        }
        Ok(Self {
            coords,
            lift_sign: 1,
        })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    /// Point of the standard affine chart `x_{n+1} = 1`.
    pub fn affine(x: &[f64]) -> Self {
        let mut v = x.to_vec();
        v.push(1.0);
        Self {
            coords: DVector::from_vec(v),
            lift_sign: 1,
        }
    }

    /// Projective dimension `n` of the ambient space.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Unit representative on the chosen sheet of the double cover.
    pub fn normalized(&self) -> DVector<f64> {
        self.coords.scale(f64::from(self.lift_sign) / self.coords.norm())
    }

    /// Unit representative whose first nonzero coordinate is positive.
    pub fn canonical(&self) -> DVector<f64> {
        let v = self.coords.normalize();
        match v.iter().find(|c| c.abs() > 1e-14) {
            Some(c) if *c < 0.0 => -v,
            _ => v,
        }
    }

    /// Equality in `S^n`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.coords.len() == other.coords.len()
            && (self.normalized() - other.normalized()).amax() <= tol
    }

    /// Equality in `P^n`.
    pub fn same_point(&self, other: &Self, tol: f64) -> bool {
        self.coords.len() == other.coords.len()
            && (self.canonical() - other.canonical()).amax() <= tol
    }

    /// Coordinates in the standard affine chart, if the point is not at infinity.
    pub fn to_affine(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        let w = self.coords[n];
        if w.abs() < 1e-300 {
            return None;
        }
        Some(self.coords.rows(0, n).iter().map(|x| x / w).collect())
    }
}

/// A hyperplane of `P^n`, i.e. a point of the dual projective space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjHyperplane {
    pub covector: DVector<f64>,
}

impl ProjHyperplane {
    pub fn new(covector: DVector<f64>) -> Result<Self> {
        if covector.norm() == 0.0 || covector.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("invalid covector".into()));
        }
        Ok(Self { covector })
    }

    pub fn eval(&self, p: &ProjPoint) -> f64 {
        self.covector.dot(&p.coords)
    }

    /// `|<h, x>|` after normalizing both to unit length.
    pub fn incidence(&self, p: &ProjPoint) -> f64 {
        (self.covector.dot(&p.coords) / (self.covector.norm() * p.coords.norm())).abs()
    }

    pub fn contains(&self, p: &ProjPoint, tol: f64) -> bool {
        self.incidence(p) <= tol
    }
}

/// Projective transformation given by a matrix with `|det| = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjMap {
    pub matrix: DMatrix<f64>,
    pub det_sign: i8,
}

impl ProjMap {
    /// Rescales `matrix` to `|det| = 1`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() < 2 {
            return Err(Error::InvalidInput("matrix must be square, size >= 2".into()));
        }
        if matrix.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let size = matrix.nrows() as f64;
        let det = matrix.determinant();
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        if det.abs().powf(1.0 / size) < 1e-10 * scale {
            return Err(Error::Singular(det.abs()));
        }
        let factor = det.abs().powf(-1.0 / size);
        Ok(Self {
            matrix: matrix * factor,
            det_sign: if det > 0.0 { 1 } else { -1 },
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix rows must have equal length".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn identity(size: usize) -> Self {
        Self {
            matrix: DMatrix::identity(size, size),
            det_sign: 1,
        }
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, p: &ProjPoint) -> ProjPoint {
        ProjPoint {
            coords: &self.matrix * &p.coords,
            lift_sign: p.lift_sign,
        }
    }

    pub fn apply_hyperplane(&self, h: &ProjHyperplane) -> ProjHyperplane {
        let dual = dual_action(self).expect("normalized maps are invertible");
        ProjHyperplane {
            covector: &dual.matrix * &h.covector,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix * &other.matrix,
            det_sign: self.det_sign * other.det_sign,
        }
    }

    pub fn inverse(&self) -> Self {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .expect("normalized maps are invertible");
        Self {
            matrix: inv,
            det_sign: self.det_sign,
        }
    }

    pub fn pow(&self, k: i64) -> Self {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut result = Self::identity(self.size());
        for _ in 0..k.unsigned_abs() {
            result = result.compose(&base);
        }
        result
    }

    /// Distance in `PGL` between the normalized matrices, up to sign.
    pub fn projective_distance(&self, other: &Self) -> f64 {
        // Both signs: canonicalizing first is unstable when entries tie in magnitude.
        (&self.matrix - &other.matrix).amax().min((&self.matrix + &other.matrix).amax())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.size())
            .map(|i| self.matrix.row(i).iter().copied().collect())
            .collect()
    }
}

/// Cross ratio `|b-x| |a-y| / (|b-y| |a-x|)` of four collinear points.
pub fn cross_ratio(x: &ProjPoint, a: &ProjPoint, b: &ProjPoint, y: &ProjPoint) -> Result<f64> {
    let n = x.coords.len();
    for p in [a, b, y] {
        if p.coords.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.coords.len(),
            });
        }
    }
    let cols = [x, a, b, y].map(|p| p.coords.normalize());
    let m = DMatrix::from_columns(&cols);
    let svd = m.svd(true, false);
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|i, j| sv[*j].total_cmp(&sv[*i]));
    if order.len() > 2 && sv[order[2]] > 1e-9 {
        return Err(Error::NonCollinear);
    }
    if sv[order[1]] < 1e-12 {
        return Err(Error::DegenerateConfiguration("all four points coincide".into()));
    }
    let u = svd.u.expect("requested U");
    let (u0, u1) = (u.column(order[0]), u.column(order[1]));
    let plane: Vec<[f64; 2]> = cols.iter().map(|c| [u0.dot(c), u1.dot(c)]).collect();
    let bracket = |i: usize, j: usize| plane[i][0] * plane[j][1] - plane[i][1] * plane[j][0];
    // Indices: x=0, a=1, b=2, y=3.
    let den = bracket(2, 3) * bracket(1, 0);
    if bracket(2, 3).abs() < 1e-14 || bracket(1, 0).abs() < 1e-14 {
        return Err(Error::DegenerateConfiguration("coincident points in denominator".into()));
    }
    Ok((bracket(2, 0) * bracket(1, 3) / den).abs())
}

/// Tolerances for eigenvalue clustering and Jordan-block detection.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Relative radius below which eigenvalues are always merged.
    pub cluster_tol: f64,
    /// Also merge eigenvalues whose spread is consistent with a perturbed
    /// Jordan block (`eps^(1/k)` splitting).
    pub defective_widening: bool,
    /// Relative singular-value threshold for ranks of `(A - λ)^k`.
    pub rank_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            cluster_tol: 1e-7,
            defective_widening: true,
            rank_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Eigen {
    pub value: Complex64,
    pub multiplicity: usize,
    /// Jordan block sizes, non-increasing.
    pub blocks: Vec<usize>,
}

impl Eigen {
    pub fn max_block(&self) -> usize {
        self.blocks.first().copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Eigen>,
    pub spectral_radius: f64,
    /// (spectral radius, largest block size among modulus-maximal eigenvalues).
    pub power: (f64, usize),
}

impl Spectrum {
    pub fn moduli(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.value.norm()).collect()
    }

    pub fn min_modulus(&self) -> f64 {
        self.moduli().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Largest block for the eigenvalue closest to `lambda`, if within `tol`.
    pub fn block_size_at(&self, lambda: Complex64, tol: f64) -> Option<usize> {
        self.eigenvalues
            .iter()
            .filter(|e| (e.value - lambda).norm() <= tol)
            .map(Eigen::max_block)
            .max()
    }
}

pub fn spectrum(a: &ProjMap) -> Result<Spectrum> {
    spectrum_with(a, &SpectrumOptions::default())
}

pub fn spectrum_with(a: &ProjMap, opts: &SpectrumOptions) -> Result<Spectrum> {
    let clusters = cluster_eigenvalues(&a.matrix, opts)?;
    let ac = linalg::to_complex(&a.matrix);
    let size = a.size();
    let scale = a.matrix.norm().max(1.0);
    let mut eigenvalues = Vec::with_capacity(clusters.len());
    for (value, mult) in clusters {
        let blocks = jordan_blocks(&ac, value, mult, scale, opts.rank_tol, size);
        eigenvalues.push(Eigen {
            value,
            multiplicity: mult,
            blocks,
        });
    }
    eigenvalues.sort_by(|x, y| {
        y.value
            .norm()
            .total_cmp(&x.value.norm())
            .then(y.value.re.total_cmp(&x.value.re))
            .then(y.value.im.total_cmp(&x.value.im))
    });
    let spectral_radius = eigenvalues.iter().map(|e| e.value.norm()).fold(0.0, f64::max);
    let top = eigenvalues
        .iter()
        .filter(|e| e.value.norm() >= spectral_radius * (1.0 - opts.cluster_tol))
        .map(Eigen::max_block)
        .max()
        .unwrap_or(1);
    Ok(Spectrum {
        eigenvalues,
        spectral_radius,
        power: (spectral_radius, top),
    })
}

/// Eigenvalues grouped into clusters, each reported as (mean, multiplicity).
fn cluster_eigenvalues(m: &DMatrix<f64>, opts: &SpectrumOptions) -> Result<Vec<(Complex64, usize)>> {
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("Schur iteration did not converge".into()))?;
    let raw: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    if raw.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalue".into()));
    }
    let scale = m.norm().max(1.0);
    let radius = |k: usize| {
        let base = opts.cluster_tol * scale;
        if opts.defective_widening && k >= 2 {
            base.max(4.0 * scale * (16.0 * f64::EPSILON).powf(1.0 / k as f64))
        } else {
            base
        }
    };
    // Greedily peel off the largest tight cluster. Growing clusters pairwise
    // would miss a split Jordan block, whose pairs are farther apart than the
    // size-2 radius allows.
    let diameter = |c: &[Complex64]| {
        c.iter()
            .flat_map(|x| c.iter().map(move |y| (x - y).norm()))
            .fold(0.0, f64::max)
    };
    let mut remaining = raw;
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    while !remaining.is_empty() {
        let mut best: Option<(usize, f64, Vec<usize>)> = None;
        for seed in 0..remaining.len() {
            let mut order: Vec<usize> = (0..remaining.len()).collect();
            order.sort_by(|&i, &j| {
                (remaining[i] - remaining[seed])
                    .norm()
                    .total_cmp(&(remaining[j] - remaining[seed]).norm())
            });
            for k in (2..=remaining.len()).rev() {
                let members: Vec<Complex64> = order[..k].iter().map(|&i| remaining[i]).collect();
                let d = diameter(&members);
                if d <= radius(k) {
                    if best.as_ref().is_none_or(|(bk, bd, _)| k > *bk || (k == *bk && d < *bd)) {
                        best = Some((k, d, order[..k].to_vec()));
                    }
                    break;
                }
            }
        }
        let mut picked = best.map_or_else(|| vec![0], |(_, _, ids)| ids);
        picked.sort_unstable_by(|a, b| b.cmp(a));
        clusters.push(picked.into_iter().map(|i| remaining.remove(i)).collect());
    }
    Ok(clusters
        .into_iter()
        .map(|c| {
            let k = c.len();
            let mean = c.iter().sum::<Complex64>() / k as f64;
            // Real clusters of a real matrix: drop the rounding imaginary part.
            let mean = if mean.im.abs() <= radius(k) {
                Complex64::new(mean.re, 0.0)
            } else {
                mean
            };
            (mean, k)
        })
        .collect())
}

/// Kernel dimensions of `(A - λ)^k`, `k = 1..=mult`, forced to end at `mult`.
fn kernel_dims(ac: &CMatrix, lambda: Complex64, mult: usize, scale: f64, tol: f64) -> Vec<usize> {
    let size = ac.nrows();
    let shifted = ac - CMatrix::identity(size, size) * lambda;
    let mut power = CMatrix::identity(size, size);
    let mut dims = Vec::with_capacity(mult);
    let mut prev = 0;
    for k in 1..=mult {
        power = &power * &shifted;
        let sv = power.clone().singular_values();
        let thr = tol * scale.powi(k as i32);
        let d = sv.iter().filter(|s| **s <= thr).count().clamp(prev, mult);
        dims.push(d);
        prev = d;
    }
    if let Some(last) = dims.last_mut() {
        *last = mult;
    }
    dims
}

fn jordan_blocks(ac: &CMatrix, lambda: Complex64, mult: usize, scale: f64, tol: f64, _size: usize) -> Vec<usize> {
    let dims = kernel_dims(ac, lambda, mult, scale, tol);
    // ge[k-1] = number of blocks of size >= k.
    let mut ge = Vec::with_capacity(mult);
    let mut prev_dim = 0;
    let mut prev_count = usize::MAX;
    for d in &dims {
        let c = (d - prev_dim).min(prev_count);
        ge.push(c);
        prev_dim = *d;
        prev_count = c;
    }
    if ge.first() == Some(&0) {
        // A cluster always contains at least one eigenvector.
        ge[0] = 1;
    }
    let mut blocks = Vec::new();
    for k in (1..=mult).rev() {
        let at_least = ge[k - 1];
        let larger = if k < mult { ge[k] } else { 0 };
        for _ in 0..at_least.saturating_sub(larger) {
            blocks.push(k);
        }
    }
    // Repair rank noise so that sizes add up to the multiplicity.
    let total: usize = blocks.iter().sum();
    if total < mult {
        blocks.extend(std::iter::repeat(1).take(mult - total));
    } else if total > mult {
        blocks = vec![mult];
    }
    blocks.sort_unstable_by(|x, y| y.cmp(x));
    blocks
}

/// Attracting subspace `E` and its invariant complement `K`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttractingSubspaces {
    /// Orthonormal basis of `E` as columns.
    pub e: DMatrix<f64>,
    /// Orthonormal basis of `K` as columns.
    pub k: DMatrix<f64>,
    /// Which construction produced the result.
    pub method: String,
}

/// Columns spanning the `d` largest left singular directions.
fn top_columns(m: &CMatrix, d: usize) -> CMatrix {
    if d == 0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|i, j| sv[*j].total_cmp(&sv[*i]));
    CMatrix::from_columns(&order[..d].iter().map(|i| u.column(*i).into_owned()).collect::<Vec<_>>())
}

/// Columns spanning the `d` smallest right singular directions.
fn bottom_kernel(m: &CMatrix, d: usize) -> CMatrix {
    if d == 0 {
        return CMatrix::zeros(m.ncols(), 0);
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|i, j| sv[*i].total_cmp(&sv[*j]));
    CMatrix::from_columns(&order[..d].iter().map(|i| v_t.row(*i).adjoint()).collect::<Vec<_>>())
}

fn real_basis(blocks: &[CMatrix], rows: usize, dim: usize) -> DMatrix<f64> {
    if dim == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let total: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut stacked = DMatrix::zeros(rows, 2 * total);
    let mut c = 0;
    for b in blocks {
        for j in 0..b.ncols() {
            for i in 0..rows {
                stacked[(i, c)] = b[(i, j)].re;
                stacked[(i, total + c)] = b[(i, j)].im;
            }
            c += 1;
        }
    }
    let svd = stacked.svd(true, false);
    let u = svd.u.expect("requested U");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|i, j| sv[*j].total_cmp(&sv[*i]));
    DMatrix::from_columns(&order[..dim].iter().map(|i| u.column(*i).into_owned()).collect::<Vec<_>>())
}

fn invariance_residual(a: &DMatrix<f64>, basis: &DMatrix<f64>) -> f64 {
    if basis.ncols() == 0 {
        return 0.0;
    }
    let image = a * basis;
    let proj = basis * (basis.transpose() * &image);
    (image - proj).norm() / a.norm().max(1.0)
}

/// `E = im h(A)` and `K = ker h(A)` where `h` kills everything except the
/// top Jordan layer of the modulus-maximal, power-maximal eigenvalues.
pub fn attracting_subspaces(a: &ProjMap) -> Result<AttractingSubspaces> {
    attracting_subspaces_with(a, &SpectrumOptions::default())
}

pub fn attracting_subspaces_with(a: &ProjMap, opts: &SpectrumOptions) -> Result<AttractingSubspaces> {
    let spec = spectrum_with(a, opts)?;
    let size = a.size();
    let ac = linalg::to_complex(&a.matrix);
    let (radius, power) = spec.power;
    let is_top = |e: &Eigen| {
        e.value.norm() >= radius * (1.0 - opts.cluster_tol) && e.max_block() == power
    };
    let mut e_parts = Vec::new();
    let mut k_parts = Vec::new();
    let mut e_dim = 0;
    let mut k_dim = 0;
    for eig in &spec.eigenvalues {
        let shifted = &ac - CMatrix::identity(size, size) * eig.value;
        let generalized = bottom_kernel(&linalg::complex_pow(&shifted, eig.multiplicity), eig.multiplicity);
        if is_top(eig) {
            let top_count = eig.blocks.iter().filter(|b| **b == power).count();
            let lifted = linalg::complex_pow(&shifted, power - 1) * &generalized;
            e_parts.push(top_columns(&lifted, top_count));
            e_dim += top_count;
            let kdim = eig.multiplicity - top_count;
            if kdim > 0 {
                k_parts.push(bottom_kernel(&linalg::complex_pow(&shifted, power - 1), kdim));
            }
            k_dim += kdim;
        } else {
            k_parts.push(generalized);
            k_dim += eig.multiplicity;
        }
    }
    let e = real_basis(&e_parts, size, e_dim);
    let k = real_basis(&k_parts, size, k_dim);
    let residual = invariance_residual(&a.matrix, &e).max(invariance_residual(&a.matrix, &k));
    if residual <= 1e-6 {
        return Ok(AttractingSubspaces {
            e,
            k,
            method: "grouped-spectral".into(),
        });
    }
    polynomial_subspaces(a, &spec, opts)
}

/// Fallback: evaluate `h(A)` as an explicit product of linear factors.
fn polynomial_subspaces(a: &ProjMap, spec: &Spectrum, opts: &SpectrumOptions) -> Result<AttractingSubspaces> {
    let size = a.size();
    let ac = linalg::to_complex(&a.matrix);
    let (radius, power) = spec.power;
    let mut h = CMatrix::identity(size, size);
    for eig in &spec.eigenvalues {
        let top = eig.value.norm() >= radius * (1.0 - opts.cluster_tol) && eig.max_block() == power;
        let exponent = if top { power - 1 } else { eig.multiplicity };
        let shifted = &ac - CMatrix::identity(size, size) * eig.value;
        h = h * linalg::complex_pow(&shifted, exponent);
    }
    let real = h.map(|z| z.re);
    if h.map(|z| z.im).amax() > 1e-6 * real.amax().max(1.0) {
        return Err(Error::NumericalFailure("h(A) is not real".into()));
    }
    let tol = 1e-8;
    let e = linalg::column_space(&real, tol);
    let k = linalg::nullspace(&real, tol);
    if e.ncols() + k.ncols() != size {
        return Err(Error::NumericalFailure("ill-conditioned h(A)".into()));
    }
    Ok(AttractingSubspaces {
        e,
        k,
        method: "polynomial-product".into(),
    })
}

/// Inverse transpose, acting on covectors.
pub fn dual_action(a: &ProjMap) -> Result<ProjMap> {
    let inv = a
        .matrix
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(a.matrix.determinant().abs()))?;
    ProjMap::new(inv.transpose())
}
