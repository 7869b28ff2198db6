//! Small dense linear-algebra helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Orthonormal basis (as columns) of the null space of `m`.
///
/// Singular values below `tol * max(1, sigma_max)` are treated as zero.
pub fn nullspace(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    // Pad to a square system so that the full right-singular basis is available.
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max().max(1.0);
    let mut basis = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= tol * smax {
            basis.push(v_t.row(i).transpose());
        }
    }
    if basis.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

/// Orthonormal basis of the column space of `m`.
pub fn column_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let rows = m.nrows();
    let cols = m.ncols().max(rows);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (rows, m.ncols())).copy_from(m);
    let svd = padded.svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max().max(f64::MIN_POSITIVE);
    let mut basis = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > tol * smax.max(1.0) && i < u.ncols() {
            basis.push(u.column(i).into_owned());
        }
    }
    if basis.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

/// The `d` right singular vectors of `m` with smallest singular values.
pub fn kernel_of_dim(m: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    let cols = m.ncols();
    if d == 0 {
        return DMatrix::zeros(cols, 0);
    }
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|i, j| sv[*i].total_cmp(&sv[*j]));
    DMatrix::from_columns(&order[..d.min(cols)].iter().map(|i| v_t.row(*i).transpose()).collect::<Vec<_>>())
}

/// The `d` left singular vectors of `m` with largest singular values.
pub fn range_of_dim(m: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    let rows = m.nrows();
    if d == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let cols = m.ncols().max(rows);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (rows, m.ncols())).copy_from(m);
    let svd = padded.svd(true, false);
    let u = svd.u.expect("requested U");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|i, j| sv[*j].total_cmp(&sv[*i]));
    DMatrix::from_columns(&order[..d.min(rows)].iter().map(|i| u.column(*i).into_owned()).collect::<Vec<_>>())
}

pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max().max(1.0);
    sv.iter().filter(|s| **s > tol * smax).count()
}

pub fn complex_rank(m: &CMatrix, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max().max(1.0);
    sv.iter().filter(|s| **s > tol * smax).count()
}

/// Orthonormal basis of the complex null space of `m`.
pub fn complex_nullspace(m: &CMatrix, tol: f64) -> CMatrix {
    let cols = m.ncols();
    let rows = m.nrows().max(cols);
    let mut padded = CMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let smax = svd.singular_values.max().max(1.0);
    let mut basis = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= tol * smax {
            basis.push(v_t.row(i).adjoint());
        }
    }
    if basis.is_empty() {
        CMatrix::zeros(cols, 0)
    } else {
        CMatrix::from_columns(&basis)
    }
}

/// Orthonormal basis of the complex column space of `m`.
pub fn complex_column_space(m: &CMatrix, tol: f64) -> CMatrix {
    if m.ncols() == 0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let rows = m.nrows();
    let cols = m.ncols().max(rows);
    let mut padded = CMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (rows, m.ncols())).copy_from(m);
    let svd = padded.svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max().max(1.0);
    let mut basis = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > tol * smax && i < u.ncols() {
            basis.push(u.column(i).into_owned());
        }
    }
    if basis.is_empty() {
        CMatrix::zeros(rows, 0)
    } else {
        CMatrix::from_columns(&basis)
    }
}

/// Real orthonormal basis of a conjugation-closed complex subspace.
pub fn realify(basis: &CMatrix, tol: f64) -> DMatrix<f64> {
    let n = basis.nrows();
    let k = basis.ncols();
    let mut stacked = DMatrix::zeros(n, 2 * k);
    for j in 0..k {
        for i in 0..n {
            stacked[(i, j)] = basis[(i, j)].re;
            stacked[(i, k + j)] = basis[(i, j)].im;
        }
    }
    column_space(&stacked, tol)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Orthonormal basis of the orthogonal complement of the columns of `m`.
pub fn orthogonal_complement(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    nullspace(&m.transpose(), tol)
}

/// Intersection of two subspaces given by (not necessarily orthonormal) column bases.
pub fn intersect_subspaces(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    // Solve a x = b y, i.e. [a, -b] (x; y) = 0.
    let mut joined = DMatrix::zeros(n, a.ncols() + b.ncols());
    joined.view_mut((0, 0), (n, a.ncols())).copy_from(a);
    joined
        .view_mut((0, a.ncols()), (n, b.ncols()))
        .copy_from(&(-b));
    let kernel = nullspace(&joined, tol);
    if kernel.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let coeffs = kernel.rows(0, a.ncols()).into_owned();
    column_space(&(a * coeffs), tol)
}

pub fn unit(v: &DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        v.clone()
    }
}

/// Matrix power by repeated squaring.
pub fn complex_pow(m: &CMatrix, k: usize) -> CMatrix {
    let mut result = CMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_rank_one() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let k = nullspace(&m, 1e-10);
        assert_eq!(k.ncols(), 2);
        assert!((&m * &k).norm() < 1e-12);
    }

    #[test]
    fn intersection_of_planes_is_line() {
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let b = DMatrix::from_column_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let c = intersect_subspaces(&a, &b, 1e-10);
        assert_eq!(c.ncols(), 1);
        assert!((c[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn realify_conjugate_pair() {
        let v = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let w = v.map(|z| z.conj());
        let b = CMatrix::from_columns(&[v, w]);
        assert_eq!(realify(&b, 1e-10).ncols(), 2);
    }
}
