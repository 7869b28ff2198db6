//! Properly convex bodies, their membership and chord oracles, and boundary probes.

mod benzecri;
mod directions;
mod examples;
pub(crate) mod lp;
pub mod scene;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::projlin::ProjPoint;
use crate::sampling;

pub use benzecri::{benzecri_chart, benzecri_chart_with, BenzecriChart};
pub use directions::{space_of_directions, DirectionSpace};
pub use examples::{make_example, pos_cone_action, pos_cone_matrix, pos_cone_vector, ExampleParams};
use lp::{Cmp, DenseLp, LpOutcome};

/// Width of the band around the boundary used by `contains`.
pub const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Interior,
    Boundary,
    Exterior,
}

/// Level set data for a domain cut out by a characteristic-function sublevel.
#[derive(Clone, Debug)]
pub struct SublevelData {
    pub base: ConvexBody,
    /// Slice covector `H`; points are scaled to `H(x) = 1` before the level test.
    pub hyperplane: DVector<f64>,
    pub level: f64,
    pub charfun: std::sync::Arc<crate::duality::CharacteristicFunction>,
}

#[derive(Clone, Debug)]
pub enum BodyKind {
    /// `{Q(x) < 0}`, on the nappe where `omega > 0`. `Q` has signature `(n, 1)`.
    Ellipsoid { form: DMatrix<f64> },
    /// `{phi_i(x) > 0 for all i}`.
    PolytopeH { facets: Vec<DVector<f64>> },
    /// Open cone over the convex hull of the vertices.
    PolytopeV {
        vertices: Vec<DVector<f64>>,
        facets: Option<Vec<DVector<f64>>>,
    },
    /// The positive orthant.
    Simplex,
    /// `C_base x R_+`: the cone over `base` with apex at the last basis vector.
    ConeJoin { base: Box<ConvexBody> },
    /// Positive-definite `m x m` matrices in an orthonormal basis of `Sym(m)`.
    PosCone { m: usize },
    /// Points of `base` with characteristic function below `level`.
    Sublevel(Box<SublevelData>),
}

impl BodyKind {
    pub fn label(&self) -> &'static str {
        match self {
            BodyKind::Ellipsoid { .. } => "ellipsoid",
            BodyKind::PolytopeH { .. } => "polytope_h",
            BodyKind::PolytopeV { .. } => "polytope_v",
            BodyKind::Simplex => "simplex",
            BodyKind::ConeJoin { .. } => "cone_join",
            BodyKind::PosCone { .. } => "pos_cone",
            BodyKind::Sublevel(_) => "vinberg_sublevel",
        }
    }
}

/// A properly convex open subset of `P^n`, stored as an open convex cone in `R^{n+1}`.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    pub dim: usize,
    pub kind: BodyKind,
    /// Interior point, scaled so that `omega(witness) = 1`.
    pub witness: DVector<f64>,
    /// Covector positive on the closure; its kernel is a hyperplane missing the closure.
    pub omega: DVector<f64>,
    pub name: String,
    tangent: DMatrix<f64>,
}

/// A chord `A + s D`, `s in (s_minus, s_plus)`, with `omega(A) = 1`, `omega(D) = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct Chord {
    pub minus: ProjPoint,
    pub plus: ProjPoint,
    pub base: DVector<f64>,
    pub direction: DVector<f64>,
    pub s_minus: f64,
    pub s_plus: f64,
}

impl ConvexBody {
    /// Builds a body and checks that the witness is interior and `omega` positive on it.
    pub fn from_parts(kind: BodyKind, witness: DVector<f64>, omega: DVector<f64>, name: &str) -> Result<Self> {
        let size = witness.len();
        if size < 2 || omega.len() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                got: omega.len(),
            });
        }
        let w = omega.dot(&witness);
        if w <= 0.0 {
            return Err(Error::InvalidInput("separating covector is not positive at the witness".into()));
        }
        let tangent = slice_basis(&omega);
        let body = Self {
            dim: size - 1,
            kind,
            witness: witness / w,
            omega,
            name: name.to_string(),
            tangent,
        };
        if body.cone_interval(&body.witness, &body.tangent.column(0).into_owned()).is_none() {
            return Err(Error::InvalidInput("witness is not an interior point".into()));
        }
        Ok(body)
    }

    /// Ellipsoid `{Q < 0}` on the nappe of `witness`; `omega` defaults to `-Q witness`.
    pub fn ellipsoid(form: DMatrix<f64>, witness: DVector<f64>) -> Result<Self> {
        if !form.is_square() || form.nrows() != witness.len() {
            return Err(Error::InvalidInput("form and witness sizes differ".into()));
        }
        let form = (&form + form.transpose()) * 0.5;
        let eig = SymmetricEigen::new(form.clone());
        let negative = eig.eigenvalues.iter().filter(|l| **l < 0.0).count();
        let scale = eig.eigenvalues.amax();
        if negative != 1 || eig.eigenvalues.iter().any(|l| l.abs() < 1e-12 * scale) {
            return Err(Error::InvalidInput("quadratic form must have signature (n,1)".into()));
        }
        if witness.dot(&(&form * &witness)) >= 0.0 {
            return Err(Error::InvalidInput("witness is not inside the quadric".into()));
        }
        let omega = -(&form * &witness);
        let omega = &omega / omega.norm();
        Self::from_parts(BodyKind::Ellipsoid { form }, witness, omega, "ellipsoid")
    }

    /// Polytope given by facet covectors (positive on the interior).
    pub fn polytope_h(facets: Vec<DVector<f64>>, witness: Option<DVector<f64>>) -> Result<Self> {
        let size = facets.first().map(|f| f.len()).ok_or_else(|| Error::InvalidInput("no facets".into()))?;
        if facets.iter().any(|f| f.len() != size) {
            return Err(Error::InvalidInput("facet covectors have different lengths".into()));
        }
        let facets: Vec<DVector<f64>> = facets.into_iter().map(|f| f.normalize()).collect();
        let stacked = DMatrix::from_columns(&facets);
        if linalg::rank(&stacked, 1e-10) < size {
            return Err(Error::InvalidInput("facets do not cut out a properly convex cone".into()));
        }
        let omega: DVector<f64> = facets.iter().sum();
        let omega = &omega / omega.norm();
        let witness = match witness {
            Some(w) => w,
            None => chebyshev_point(&facets, &omega)?,
        };
        if facets.iter().any(|f| f.dot(&witness) <= 0.0) {
            return Err(Error::InvalidInput("witness violates a facet inequality".into()));
        }
        Self::from_parts(BodyKind::PolytopeH { facets }, witness, omega, "polytope_h")
    }

    /// Convex hull of vertices (homogeneous; all on one side of some hyperplane).
    pub fn polytope_v(vertices: Vec<DVector<f64>>, facets: Option<Vec<DVector<f64>>>) -> Result<Self> {
        let size = vertices.first().map(|v| v.len()).ok_or_else(|| Error::InvalidInput("no vertices".into()))?;
        if vertices.iter().any(|v| v.len() != size) {
            return Err(Error::InvalidInput("vertices have different lengths".into()));
        }
        if linalg::rank(&DMatrix::from_columns(&vertices), 1e-10) < size {
            return Err(Error::InvalidInput("vertices span a proper subspace".into()));
        }
        let omega = separating_covector(&vertices)?;
        let vertices: Vec<DVector<f64>> = vertices.iter().map(|v| v / omega.dot(v)).collect();
        let witness = vertices.iter().sum::<DVector<f64>>() / vertices.len() as f64;
        Self::from_parts(BodyKind::PolytopeV { vertices, facets }, witness, omega, "polytope_v")
    }

    /// The open positive orthant of `R^{n+1}`.
    pub fn simplex(n: usize) -> Result<Self> {
        let size = n + 1;
        Self::from_parts(
            BodyKind::Simplex,
            DVector::from_element(size, 1.0),
            DVector::from_element(size, 1.0 / (size as f64).sqrt()),
            "simplex",
        )
    }

    /// Cone over `base` with a new apex.
    pub fn cone_join(base: ConvexBody) -> Result<Self> {
        let size = base.dim + 2;
        let mut witness = DVector::zeros(size);
        witness.rows_mut(0, size - 1).copy_from(&base.witness);
        witness[size - 1] = 1.0;
        let mut omega = DVector::zeros(size);
        omega.rows_mut(0, size - 1).copy_from(&base.omega);
        omega[size - 1] = 1.0;
        Self::from_parts(BodyKind::ConeJoin { base: Box::new(base) }, witness, omega, "cone_join")
    }

    /// Projectivized cone of positive-definite `m x m` matrices.
    pub fn pos_cone(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidInput("pos_cone needs m >= 2".into()));
        }
        let identity = pos_cone_vector(&DMatrix::identity(m, m));
        let omega = &identity / identity.norm();
        Self::from_parts(BodyKind::PosCone { m }, identity, omega, "pos_cone")
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    /// `n + 1`.
    pub fn size(&self) -> usize {
        self.dim + 1
    }

    /// Orthonormal basis of `ker omega`, the tangent space of the slice chart.
    pub fn tangent_basis(&self) -> &DMatrix<f64> {
        &self.tangent
    }

    /// Representative with `omega = 1`, if the point is off the hyperplane at infinity.
    pub fn lift(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let w = self.omega.dot(x);
        if w.abs() <= 1e-14 * x.norm() * self.omega.norm() {
            None
        } else {
            Some(x / w)
        }
    }

    /// Slice-chart coordinates `y` with `lift(x) = witness + tangent * y`.
    pub fn slice_coords(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        self.lift(x).map(|xl| self.tangent.transpose() * (xl - &self.witness))
    }

    pub fn from_slice_coords(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.witness + &self.tangent * y
    }

    /// `{s : a + s d in the open cone}` for `a` in the open cone; `None` otherwise.
    pub fn cone_interval(&self, a: &DVector<f64>, d: &DVector<f64>) -> Option<(f64, f64)> {
        match &self.kind {
            BodyKind::Ellipsoid { form } => ellipsoid_interval(form, a, d),
            BodyKind::PolytopeH { facets } => halfspace_interval(facets.iter().map(|f| (f.dot(a), f.dot(d)))),
            BodyKind::Simplex => halfspace_interval(a.iter().copied().zip(d.iter().copied())),
            BodyKind::PolytopeV { vertices, facets } => match facets {
                Some(f) => halfspace_interval(f.iter().map(|f| (f.dot(a), f.dot(d)))),
                None => hull_interval(vertices, a, d),
            },
            BodyKind::ConeJoin { base } => {
                let k = self.dim;
                let (w, dw) = (a[k], d[k]);
                if w <= 0.0 {
                    return None;
                }
                let (mut lo, mut hi) = base.cone_interval(&a.rows(0, k).into_owned(), &d.rows(0, k).into_owned())?;
                if dw > 0.0 {
                    lo = lo.max(-w / dw);
                } else if dw < 0.0 {
                    hi = hi.min(-w / dw);
                }
                Some((lo, hi))
            }
            BodyKind::PosCone { m } => pos_cone_interval(*m, a, d),
            BodyKind::Sublevel(data) => sublevel_interval(data, a, d),
        }
    }

    /// Minkowski gauge of the slice relative to the witness: `< 1` inside, `1` on the boundary.
    pub fn gauge(&self, x: &DVector<f64>) -> f64 {
        let Some(xl) = self.lift(x) else {
            return f64::INFINITY;
        };
        let d = &xl - &self.witness;
        if d.norm() <= 1e-15 {
            return 0.0;
        }
        match self.cone_interval(&self.witness, &d) {
            Some((_, hi)) => 1.0 / hi,
            None => f64::INFINITY,
        }
    }

    pub fn locate(&self, x: &DVector<f64>) -> Location {
        self.locate_with_tol(x, BOUNDARY_TOL)
    }

    /// Classifies `x`, using exact algebraic data when the kind provides it.
    pub fn locate_with_tol(&self, x: &DVector<f64>, tol: f64) -> Location {
        let Some(xl) = self.lift(x) else {
            return Location::Exterior;
        };
        let margin = match &self.kind {
            BodyKind::Ellipsoid { form } => {
                let scale = form.amax() * xl.norm_squared();
                -xl.dot(&(form * &xl)) / scale
            }
            BodyKind::PolytopeH { facets } => {
                facets.iter().map(|f| f.dot(&xl)).fold(f64::INFINITY, f64::min) / xl.norm()
            }
            BodyKind::Simplex => xl.min() / xl.norm(),
            _ => 1.0 - self.gauge(&xl),
        };
        if margin > tol {
            Location::Interior
        } else if margin >= -tol {
            Location::Boundary
        } else {
            Location::Exterior
        }
    }

    pub fn contains(&self, p: &ProjPoint) -> Location {
        self.locate(&p.coords)
    }

    pub fn is_interior(&self, x: &DVector<f64>) -> bool {
        self.locate(x) == Location::Interior
    }

    /// Chord through `a` in direction `dir` (homogeneous, or a tangent vector of the standard chart).
    pub fn chord(&self, a: &ProjPoint, dir: &DVector<f64>) -> Result<Chord> {
        let d = self.homogeneous_direction(a, dir)?;
        let base = self.lift(&a.coords).ok_or(Error::NotInterior)?;
        let direction = &d - &base * self.omega.dot(&d);
        if direction.norm() <= 1e-14 * d.norm() {
            return Err(Error::InvalidInput("direction is parallel to the point".into()));
        }
        let (lo, hi) = self.cone_interval(&base, &direction).ok_or(Error::NotInterior)?;
        if !(lo < 0.0 && hi > 0.0) {
            return Err(Error::NotInterior);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NumericalFailure("unbounded chord in the slice".into()));
        }
        Ok(Chord {
            minus: ProjPoint::new(&base + &direction * lo)?,
            plus: ProjPoint::new(&base + &direction * hi)?,
            base,
            direction,
            s_minus: lo,
            s_plus: hi,
        })
    }

    /// Chord endpoints by bisection on the membership oracle alone.
    pub fn chord_by_bisection(&self, a: &ProjPoint, dir: &DVector<f64>) -> Result<Chord> {
        let d = self.homogeneous_direction(a, dir)?;
        let base = self.lift(&a.coords).ok_or(Error::NotInterior)?;
        if !self.is_interior(&base) {
            return Err(Error::NotInterior);
        }
        let direction = &d - &base * self.omega.dot(&d);
        // Zero-width band: bisect on the sign of the oracle itself.
        let inside = |s: f64| self.locate_with_tol(&(&base + &direction * s), 0.0) == Location::Interior;
        let hi = bisect_exit(&inside, 1.0)?;
        let lo = -bisect_exit(&|s: f64| inside(-s), 1.0)?;
        Ok(Chord {
            minus: ProjPoint::new(&base + &direction * lo)?,
            plus: ProjPoint::new(&base + &direction * hi)?,
            base,
            direction,
            s_minus: lo,
            s_plus: hi,
        })
    }

    fn homogeneous_direction(&self, a: &ProjPoint, dir: &DVector<f64>) -> Result<DVector<f64>> {
        let size = self.size();
        if a.coords.len() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                got: a.coords.len(),
            });
        }
        let d = if dir.len() == size {
            dir.clone()
        } else if dir.len() == self.dim {
            dir.clone().insert_row(self.dim, 0.0)
        } else {
            return Err(Error::DimensionMismatch {
                expected: size,
                got: dir.len(),
            });
        };
        if d.norm() == 0.0 {
            return Err(Error::InvalidInput("zero direction".into()));
        }
        Ok(d)
    }

    /// Boundary point of the slice in tangent direction `u` from the witness.
    pub fn boundary_point(&self, u: &DVector<f64>) -> Option<DVector<f64>> {
        let (_, hi) = self.cone_interval(&self.witness, u)?;
        hi.is_finite().then(|| &self.witness + u * hi)
    }

    /// Random interior point, radially spread out to relative depth `1 - margin`.
    pub fn random_interior<R: Rng>(&self, rng: &mut R, margin: f64) -> DVector<f64> {
        loop {
            let coeffs = sampling::unit_vector(rng, self.dim);
            let u = &self.tangent * coeffs;
            if let Some((_, hi)) = self.cone_interval(&self.witness, &u) {
                if hi.is_finite() {
                    let t: f64 = rng.gen::<f64>().powf(1.0 / self.dim as f64) * (1.0 - margin);
                    return &self.witness + u * (hi * t);
                }
            }
        }
    }

    /// Extreme covectors of the supporting cone at a boundary point, each with value 1 at the witness.
    pub fn supporting_covectors(&self, p: &DVector<f64>, samples: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
        let pl = self.lift(p).ok_or(Error::NotBoundary)?;
        if (self.gauge(&pl) - 1.0).abs() > 1e-7 {
            return Err(Error::NotBoundary);
        }
        let raw = self.raw_supporting(&pl, samples, seed)?;
        let mut out: Vec<DVector<f64>> = Vec::new();
        for phi in raw {
            let w = phi.dot(&self.witness);
            if w <= 0.0 {
                continue;
            }
            let phi = phi / w;
            if !out.iter().any(|q| (q - &phi).amax() < 1e-9) {
                out.push(phi);
            }
        }
        if out.is_empty() {
            return Err(Error::NumericalFailure("no supporting covector found".into()));
        }
        Ok(out)
    }

    fn raw_supporting(&self, pl: &DVector<f64>, samples: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
        let scale = pl.norm();
        Ok(match &self.kind {
            BodyKind::Ellipsoid { form } => vec![-(form * pl)],
            BodyKind::PolytopeH { facets } => active(facets.iter(), pl, scale),
            BodyKind::Simplex => {
                let basis: Vec<DVector<f64>> = (0..self.size()).map(|i| unit(self.size(), i)).collect();
                active(basis.iter(), pl, scale)
            }
            BodyKind::PolytopeV { vertices, facets } => match facets {
                Some(f) => active(f.iter(), pl, scale),
                None => hull_supporting(vertices, pl, &self.witness, samples, seed)?,
            },
            BodyKind::ConeJoin { base } => {
                let k = self.dim;
                let x = pl.rows(0, k).into_owned();
                let mut out = Vec::new();
                if pl[k].abs() <= 1e-9 * scale {
                    out.push(unit(self.size(), k));
                }
                if x.norm() > 1e-12 && base.lift(&x).is_some_and(|xl| (base.gauge(&xl) - 1.0).abs() <= 1e-7) {
                    for psi in base.raw_supporting(&base.lift(&x).unwrap(), samples, seed)? {
                        out.push(psi.insert_row(k, 0.0));
                    }
                }
                out
            }
            BodyKind::PosCone { m } => {
                let s = pos_cone_matrix(*m, pl);
                let eig = SymmetricEigen::new(s);
                let top = eig.eigenvalues.amax();
                let kernel: Vec<DVector<f64>> = eig
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| l.abs() <= 1e-8 * top)
                    .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
                    .collect();
                let mut rng = sampling::rng(seed);
                let mut gens: Vec<DVector<f64>> = kernel.clone();
                if kernel.len() > 1 {
                    for _ in 0..samples.max(4) {
                        let c = sampling::unit_vector(&mut rng, kernel.len());
                        gens.push(kernel.iter().zip(c.iter()).map(|(k, ci)| k * *ci).sum());
                    }
                }
                gens.iter().map(|k| pos_cone_vector(&(k * k.transpose()))).collect()
            }
            BodyKind::Sublevel(_) => vec![self.numeric_tangent(pl)],
        })
    }

    /// Tangent covector from a finite-difference gradient of the gauge.
    fn numeric_tangent(&self, pl: &DVector<f64>) -> DVector<f64> {
        let h = 1e-5 * (pl - &self.witness).norm().max(1e-3);
        let mut grad = DVector::zeros(self.size());
        for j in 0..self.dim {
            let e = self.tangent.column(j).into_owned();
            let g = (self.gauge(&(pl + &e * h)) - self.gauge(&(pl - &e * h))) / (2.0 * h);
            grad += e * g;
        }
        // phi vanishes at p, decreases into the body: phi = omega*(grad . p) - grad.
        &self.omega * grad.dot(pl) / self.omega.dot(pl) - grad
    }
}

/// Orthonormal basis of `ker omega` from Gram-Schmidt on the projected standard basis,
/// so that `omega = e_{n+1}^*` yields `e_1, ..., e_n`.
fn slice_basis(omega: &DVector<f64>) -> DMatrix<f64> {
    let size = omega.len();
    let w = omega.normalize();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(size - 1);
    for i in 0..size {
        let mut v = unit(size, i);
        v -= &w * w[i];
        for b in &basis {
            v -= b * b.dot(&v);
        }
        if v.norm() > 1e-6 {
            basis.push(v.normalize());
        }
        if basis.len() == size - 1 {
            break;
        }
    }
    DMatrix::from_columns(&basis)
}

fn unit(size: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(size);
    v[i] = 1.0;
    v
}

fn active<'a>(facets: impl Iterator<Item = &'a DVector<f64>>, pl: &DVector<f64>, scale: f64) -> Vec<DVector<f64>> {
    facets
        .filter(|f| f.dot(pl).abs() <= 1e-8 * scale * f.norm())
        .cloned()
        .collect()
}

/// Smallest `s > 0` (to tolerance) where `inside` turns false, starting from scale `step`.
fn bisect_exit(inside: &dyn Fn(f64) -> bool, step: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = step;
    let mut tries = 0;
    while inside(hi) {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::NumericalFailure("could not bracket the boundary".into()));
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi.max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Component containing 0 of `{s : Q(a + s d) < 0}`.
fn ellipsoid_interval(form: &DMatrix<f64>, a: &DVector<f64>, d: &DVector<f64>) -> Option<(f64, f64)> {
    let qd = form * d;
    let qa = a.dot(&(form * a));
    let b = a.dot(&qd);
    let c = d.dot(&qd);
    quadratic_negative_interval(qa, b, c)
}

/// Component containing 0 of `{s : qa + 2 b s + c s^2 < 0}`, given `qa < 0`.
pub(crate) fn quadratic_negative_interval(qa: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if qa >= 0.0 {
        return None;
    }
    let disc = b * b - c * qa;
    let scale = b.abs().max(c.abs()).max(qa.abs());
    if c.abs() <= 1e-15 * scale {
        if b > 0.0 {
            return Some((f64::NEG_INFINITY, -qa / (2.0 * b)));
        } else if b < 0.0 {
            return Some((-qa / (2.0 * b), f64::INFINITY));
        }
        return Some((f64::NEG_INFINITY, f64::INFINITY));
    }
    if disc <= 0.0 {
        // Only possible for c < 0 with a parallel to d: the line runs through the apex.
        let root = -b / c;
        return Some(if root > 0.0 { (f64::NEG_INFINITY, root) } else { (root, f64::INFINITY) });
    }
    // Stable roots of c s^2 + 2 b s + qa.
    let sign = if b >= 0.0 { 1.0 } else { -1.0 };
    let q = -(b + sign * disc.sqrt());
    let (r1, r2) = if q != 0.0 { (q / c, qa / q) } else { (disc.sqrt() / c, -disc.sqrt() / c) };
    let (r1, r2) = (r1.min(r2), r1.max(r2));
    if c > 0.0 {
        Some((r1, r2))
    } else if r1 > 0.0 {
        Some((f64::NEG_INFINITY, r1))
    } else {
        Some((r2, f64::INFINITY))
    }
}

/// `{s : alpha_i + s beta_i > 0 for all i}` given all `alpha_i > 0`.
fn halfspace_interval(pairs: impl Iterator<Item = (f64, f64)>) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (alpha, beta) in pairs {
        if alpha <= 0.0 {
            return None;
        }
        if beta < 0.0 {
            hi = hi.min(-alpha / beta);
        } else if beta > 0.0 {
            lo = lo.max(-alpha / beta);
        }
    }
    Some((lo, hi))
}

fn hull_interval(vertices: &[DVector<f64>], a: &DVector<f64>, d: &DVector<f64>) -> Option<(f64, f64)> {
    let extreme = |sign: f64| -> Option<f64> {
        let k = vertices.len();
        let mut objective = vec![0.0; k + 1];
        objective[k] = sign;
        let mut bounds = vec![(0.0, f64::INFINITY); k];
        bounds.push((f64::NEG_INFINITY, f64::INFINITY));
        let mut lp = DenseLp::new(objective, bounds);
        for j in 0..a.len() {
            let mut row: Vec<f64> = vertices.iter().map(|v| v[j]).collect();
            row.push(-d[j]);
            lp.constrain(row, Cmp::Eq, a[j]);
        }
        match lp.maximize().ok()? {
            LpOutcome::Optimal { objective, .. } => Some(sign * objective),
            LpOutcome::Unbounded => Some(sign * f64::INFINITY),
            LpOutcome::Infeasible => None,
        }
    };
    let hi = extreme(1.0)?;
    let lo = extreme(-1.0)?;
    let scale = 1e-9 * a.norm() / d.norm().max(1e-300);
    (lo < -scale && hi > scale).then_some((lo, hi))
}

/// Supporting covectors of a vertex hull at `p`, from LPs with random objectives.
fn hull_supporting(
    vertices: &[DVector<f64>],
    pl: &DVector<f64>,
    witness: &DVector<f64>,
    samples: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    let size = pl.len();
    let mut rng = sampling::rng(seed);
    let mut out = Vec::new();
    for _ in 0..samples.max(1) {
        let c = sampling::unit_vector(&mut rng, size);
        let mut lp = DenseLp::new(c.iter().copied().collect(), vec![(f64::NEG_INFINITY, f64::INFINITY); size]);
        for v in vertices {
            lp.constrain(v.iter().copied().collect(), Cmp::Ge, 0.0);
        }
        lp.constrain(pl.iter().copied().collect(), Cmp::Eq, 0.0);
        lp.constrain(witness.iter().copied().collect(), Cmp::Eq, 1.0);
        if let LpOutcome::Optimal { values, .. } = lp.maximize()? {
            out.push(DVector::from_vec(values));
        }
    }
    Ok(out)
}

fn pos_cone_interval(m: usize, a: &DVector<f64>, d: &DVector<f64>) -> Option<(f64, f64)> {
    let am = pos_cone_matrix(m, a);
    let chol = am.cholesky()?;
    let l_inv = chol.l().try_inverse()?;
    let reduced = &l_inv * pos_cone_matrix(m, d) * l_inv.transpose();
    let eig = SymmetricEigen::new((&reduced + reduced.transpose()) * 0.5);
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for mu in eig.eigenvalues.iter() {
        if *mu < 0.0 {
            hi = hi.min(-1.0 / mu);
        } else if *mu > 0.0 {
            lo = lo.max(-1.0 / mu);
        }
    }
    Some((lo, hi))
}

fn sublevel_interval(data: &SublevelData, a: &DVector<f64>, d: &DVector<f64>) -> Option<(f64, f64)> {
    let member = |x: &DVector<f64>| crate::duality::sublevel_member(data, x);
    if !member(a) {
        return None;
    }
    let (blo, bhi) = data.base.cone_interval(a, d)?;
    let edge = |limit: f64| -> f64 {
        let (mut inside, mut outside) = (0.0, limit);
        for _ in 0..80 {
            let mid = 0.5 * (inside + outside);
            if member(&(a + d * mid)) {
                inside = mid;
            } else {
                outside = mid;
            }
            if (outside - inside).abs() <= 1e-13 * outside.abs() {
                break;
            }
        }
        0.5 * (inside + outside)
    };
    let finite = |s: f64| if s.is_finite() { s } else { s.signum() * 1e6 };
    Some((edge(finite(blo)), edge(finite(bhi))))
}

/// Interior point of `{phi_i > 0, omega = 1}` maximizing the smallest slack.
fn chebyshev_point(facets: &[DVector<f64>], omega: &DVector<f64>) -> Result<DVector<f64>> {
    let size = omega.len();
    let mut objective = vec![0.0; size + 1];
    objective[size] = 1.0;
    let mut bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); size];
    bounds.push((f64::NEG_INFINITY, 1.0));
    let mut lp = DenseLp::new(objective, bounds);
    for f in facets {
        let mut row: Vec<f64> = f.iter().copied().collect();
        row.push(-1.0);
        lp.constrain(row, Cmp::Ge, 0.0);
    }
    let mut row: Vec<f64> = omega.iter().copied().collect();
    row.push(0.0);
    lp.constrain(row, Cmp::Eq, 1.0);
    match lp.maximize()? {
        LpOutcome::Optimal { objective, values } if objective > 1e-12 => Ok(DVector::from_column_slice(&values[..size])),
        _ => Err(Error::InvalidInput("facet inequalities have empty interior".into())),
    }
}

/// Covector positive on every vertex, maximizing the smallest normalized value.
fn separating_covector(vertices: &[DVector<f64>]) -> Result<DVector<f64>> {
    let size = vertices[0].len();
    let mut objective = vec![0.0; size + 1];
    objective[size] = 1.0;
    let mut bounds = vec![(-1.0, 1.0); size];
    bounds.push((f64::NEG_INFINITY, f64::INFINITY));
    let mut lp = DenseLp::new(objective, bounds);
    for v in vertices {
        let v = v.normalize();
        let mut row: Vec<f64> = v.iter().copied().collect();
        row.push(-1.0);
        lp.constrain(row, Cmp::Ge, 0.0);
    }
    match lp.maximize()? {
        LpOutcome::Optimal { objective, values } if objective > 1e-9 => {
            let omega = DVector::from_column_slice(&values[..size]);
            Ok(&omega / omega.norm())
        }
        _ => Err(Error::InvalidInput("vertices are not contained in an affine patch".into())),
    }
}

/// Spec-level wrapper around [`ConvexBody::contains`].
pub fn contains(body: &ConvexBody, p: &ProjPoint) -> Location {
    body.contains(p)
}

/// Spec-level wrapper around [`ConvexBody::chord`].
pub fn chord(body: &ConvexBody, a: &ProjPoint, dir: &DVector<f64>) -> Result<Chord> {
    body.chord(a, dir)
}

/// Generators (or a sample, for curved cones) of the supporting cone at `p`.
pub fn supporting_cone(body: &ConvexBody, p: &ProjPoint) -> Result<Vec<DVector<f64>>> {
    body.supporting_covectors(&p.coords, 16, 0x5eed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundaryProbe {
    pub is_c1: bool,
    pub is_strictly_convex_point: bool,
}

/// Probes whether `p` is a C1 point and whether it lies inside a boundary segment.
///
/// Flat segments shorter than about `1e-3` of the body's size can be missed.
pub fn boundary_probe(body: &ConvexBody, p: &ProjPoint, samples: usize) -> Result<BoundaryProbe> {
    let gens = body.supporting_covectors(&p.coords, samples.max(8), 0xb0)?;
    let first = gens[0].normalize();
    let is_c1 = gens.iter().all(|g| (g.normalize() - &first).norm() < 1e-6);
    let pl = body.lift(&p.coords).ok_or(Error::NotBoundary)?;
    // Directions along which a boundary segment through p could run.
    let mut constraints: Vec<DVector<f64>> = gens.clone();
    constraints.push(body.omega.clone());
    let rows = DMatrix::from_rows(&constraints.iter().map(|c| c.transpose()).collect::<Vec<_>>());
    let flat = linalg::nullspace(&rows, 1e-9);
    let size = (&pl - &body.witness).norm().max(1e-6);
    let mut rng = sampling::rng(0xf1a7);
    let mut directions: Vec<DVector<f64>> = flat.column_iter().map(|c| c.into_owned()).collect();
    if flat.ncols() > 1 {
        for _ in 0..samples {
            directions.push(&flat * sampling::unit_vector(&mut rng, flat.ncols()));
        }
    }
    let in_closure = |x: &DVector<f64>| body.gauge(x) <= 1.0 + 1e-8;
    let mut strictly_convex = true;
    'search: for w in &directions {
        for t in [0.1, 0.03, 0.01, 0.003] {
            let step = w * (t * size);
            if in_closure(&(&pl + &step)) && in_closure(&(&pl - &step)) {
                strictly_convex = false;
                break 'search;
            }
        }
    }
    Ok(BoundaryProbe {
        is_c1,
        is_strictly_convex_point: strictly_convex,
    })
}

#[cfg(test)]
mod tests;
