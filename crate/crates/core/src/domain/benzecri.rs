//! Benzécri charts: projective normalizations sandwiching the body between balls.

use nalgebra::{DMatrix, DVector};

use super::ConvexBody;
use crate::error::{Error, Result};
use crate::projlin::{ProjMap, ProjPoint};
use crate::sampling;

#[derive(Clone, Debug)]
pub struct BenzecriChart {
    /// Sends `p` to the origin of the standard affine chart.
    pub map: ProjMap,
    /// `max / min` of the boundary radius over the direction grid (the min is 1).
    pub r_achieved: f64,
    pub directions: usize,
}

impl BenzecriChart {
    /// Minimum and maximum boundary radius of `map(body)` seen from the origin,
    /// measured on an independent direction grid.
    pub fn radii(&self, body: &ConvexBody, p: &ProjPoint, count: usize, seed: u64) -> Result<(f64, f64)> {
        let grid = sampling::direction_set(body.dim, count, seed);
        let radii = chart_radii(body, &p.coords, &self.map.matrix, &grid)?;
        Ok((
            radii.iter().copied().fold(f64::INFINITY, f64::min),
            radii.iter().copied().fold(0.0, f64::max),
        ))
    }
}

pub fn benzecri_chart(body: &ConvexBody, p: &ProjPoint, r_target: f64) -> Result<BenzecriChart> {
    benzecri_chart_with(body, p, r_target, 2000, 0xbe2)
}

/// Chart from the slice at `p`, a volume-minimizing projective recentering, and
/// the maximum-volume origin-centred inscribed ellipsoid.
pub fn benzecri_chart_with(
    body: &ConvexBody,
    p: &ProjPoint,
    r_target: f64,
    directions: usize,
    seed: u64,
) -> Result<BenzecriChart> {
    if r_target <= 1.0 {
        return Err(Error::InvalidInput("R_target must exceed 1".into()));
    }
    let n = body.dim;
    let pl = body.lift(&p.coords).ok_or(Error::NotInterior)?;
    if !body.is_interior(&pl) {
        return Err(Error::NotInterior);
    }
    let tangent = body.tangent_basis();
    // Frame [E | P]: chart coordinates (y, w) with x = E y + w P.
    let mut frame = DMatrix::zeros(n + 1, n + 1);
    frame.view_mut((0, 0), (n + 1, n)).copy_from(tangent);
    frame.set_column(n, &pl);
    let t1 = frame
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("degenerate slice frame".into()))?;

    let grid = sampling::direction_set(n, directions, seed);
    let mut points = Vec::with_capacity(grid.ncols());
    for theta in grid.column_iter() {
        let u = tangent * theta;
        let (_, hi) = body
            .cone_interval(&pl, &u)
            .ok_or_else(|| Error::NumericalFailure("chord oracle failed at p".into()))?;
        if !hi.is_finite() {
            return Err(Error::NumericalFailure("slice is unbounded".into()));
        }
        points.push(theta.into_owned() * hi);
    }

    let b = recenter(&points, n)?;
    let mut t2 = DMatrix::identity(n + 1, n + 1);
    for j in 0..n {
        t2[(n, j)] = b[j];
    }
    let m12 = &t2 * &t1;
    let m12_inv = &frame * {
        let mut inv = DMatrix::identity(n + 1, n + 1);
        for j in 0..n {
            inv[(n, j)] = -b[j];
        }
        inv
    };

    // Supporting halfspaces a . y <= 1 of the recentred image.
    let mut normals = Vec::new();
    for y in &points {
        let x = &pl + tangent * y;
        let covectors = body.supporting_covectors(&x, 1, 0x5a)?;
        for phi in covectors {
            let image = m12_inv.transpose() * phi;
            let w = image[n];
            if w > 0.0 {
                normals.push(-image.rows(0, n).into_owned() / w);
            }
        }
    }
    let linear = inscribed_ellipsoid_map(&normals, n)?;
    let mut t3 = DMatrix::identity(n + 1, n + 1);
    t3.view_mut((0, 0), (n, n)).copy_from(&linear);
    let mut matrix = &t3 * m12;

    let radii = chart_radii(body, &pl, &matrix, &grid)?;
    let rmin = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    for i in 0..n {
        for j in 0..=n {
            matrix[(i, j)] /= rmin;
        }
    }
    let chart = BenzecriChart {
        map: ProjMap::new(matrix)?,
        r_achieved: rmax / rmin,
        directions: grid.ncols(),
    };
    if chart.r_achieved > r_target {
        return Err(Error::TargetNotMet {
            target: r_target,
            achieved: chart.r_achieved,
            best: Box::new(chart),
        });
    }
    Ok(chart)
}

/// Boundary radius of `matrix(body)` from the origin along each grid column.
fn chart_radii(body: &ConvexBody, pl: &DVector<f64>, matrix: &DMatrix<f64>, grid: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = body.dim;
    let inv = matrix
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure("chart map is singular".into()))?;
    let image = matrix * pl;
    if image.rows(0, n).norm() > 1e-8 * image[n].abs() {
        return Err(Error::NumericalFailure("chart does not send p to the origin".into()));
    }
    let c = image[n];
    let mut out = Vec::with_capacity(grid.ncols());
    for psi in grid.column_iter() {
        let d = &inv * psi.into_owned().insert_row(n, 0.0);
        let (_, hi) = body
            .cone_interval(pl, &d)
            .ok_or_else(|| Error::NumericalFailure("chord oracle failed".into()))?;
        let r = hi / c;
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::NumericalFailure("chart image is unbounded".into()));
        }
        out.push(r);
    }
    Ok(out)
}

/// Minimizes `V(b) = sum |y|^n (1 + <b, y>)^{-n}`, the image volume under
/// `y -> y / (1 + <b, y>)`, by damped Newton.
fn recenter(points: &[DVector<f64>], n: usize) -> Result<DVector<f64>> {
    let nf = n as f64;
    let value = |b: &DVector<f64>| -> Option<f64> {
        let mut v = 0.0;
        for y in points {
            let den = 1.0 + b.dot(y);
            if den <= 0.0 {
                return None;
            }
            v += (y.norm() / den).powi(n as i32);
        }
        Some(v)
    };
    let mut b = DVector::zeros(n);
    let mut current = value(&b).ok_or_else(|| Error::NumericalFailure("recentering start infeasible".into()))?;
    for _ in 0..100 {
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for y in points {
            let den = 1.0 + b.dot(y);
            let w = (y.norm() / den).powi(n as i32);
            grad -= y * (nf * w / den);
            hess += y * y.transpose() * (nf * (nf + 1.0) * w / (den * den));
        }
        let Some(step) = hess.clone().cholesky().map(|c| -c.solve(&grad)) else {
            break;
        };
        let decrement = -grad.dot(&step);
        if decrement <= 1e-14 * current {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial = &b + &step * t;
            if let Some(v) = value(&trial) {
                if v <= current - 0.25 * t * decrement {
                    b = trial;
                    current = v;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(b)
}

/// Linear map sending the max-volume origin-centred ellipsoid inside
/// `{a_i . y <= 1}` to the unit ball (Titterington's multiplicative algorithm
/// on the dual D-optimal design problem).
fn inscribed_ellipsoid_map(normals: &[DVector<f64>], n: usize) -> Result<DMatrix<f64>> {
    if normals.len() < n + 1 {
        return Err(Error::NumericalFailure("too few supporting halfspaces".into()));
    }
    let nf = n as f64;
    let mut u = vec![1.0 / normals.len() as f64; normals.len()];
    let design = |u: &[f64]| -> DMatrix<f64> {
        normals
            .iter()
            .zip(u)
            .fold(DMatrix::zeros(n, n), |acc, (a, w)| acc + a * a.transpose() * *w)
    };
    let mut s = design(&u);
    for _ in 0..5000 {
        let s_inv = s
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NumericalFailure("singular design matrix".into()))?;
        let g: Vec<f64> = normals.iter().map(|a| a.dot(&(&s_inv * a))).collect();
        let gmax = g.iter().copied().fold(0.0, f64::max);
        if gmax <= nf * (1.0 + 1e-6) {
            break;
        }
        for (ui, gi) in u.iter_mut().zip(&g) {
            *ui *= gi / nf;
        }
        s = design(&u);
    }
    let chol = (s * nf)
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("design matrix is not positive definite".into()))?;
    Ok(chol.l().transpose())
}
