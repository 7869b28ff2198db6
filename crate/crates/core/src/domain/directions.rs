//! The space of directions of a body at a boundary point.

use nalgebra::{DMatrix, DVector};

use super::{ConvexBody, Location};
use crate::error::{Error, Result};
use crate::projlin::ProjPoint;
use crate::sampling;

/// Directions `v` (tangent to the slice) for which the ray `p + t v` enters the body.
///
/// This set is convex and open but need not be properly convex: at a C1
/// point it is an open half-space, i.e. an affine patch of `P^{n-1}`.
#[derive(Clone, Debug)]
pub struct DirectionSpace {
    body: ConvexBody,
    /// Lift of `p` with `omega = 1`.
    pub base_point: DVector<f64>,
    /// Orthonormal basis of the slice tangent space; directions are coefficient vectors.
    pub tangent: DMatrix<f64>,
    /// Supporting covector at `p` used to orient the half-space test.
    pub support: DVector<f64>,
    scale: f64,
}

impl DirectionSpace {
    /// Projective dimension `n - 1` of the direction space.
    pub fn dim(&self) -> usize {
        self.tangent.ncols() - 1
    }

    /// Whether the ray from `p` along `tangent * coeffs` immediately enters the body.
    pub fn contains(&self, coeffs: &DVector<f64>) -> bool {
        let v = &self.tangent * coeffs;
        let norm = v.norm();
        if norm == 0.0 {
            return false;
        }
        let v = v / norm;
        (4..44).step_by(2).any(|k| {
            let eps = self.scale * 2f64.powi(-k);
            self.body.locate(&(&self.base_point + &v * eps)) == Location::Interior
        })
    }

    /// For a 2-dimensional body: membership along `count` equispaced angles.
    pub fn sweep(&self, count: usize) -> Result<Vec<(f64, bool)>> {
        if self.tangent.ncols() != 2 {
            return Err(Error::InvalidInput("angular sweep needs a 2-dimensional body".into()));
        }
        Ok((0..count)
            .map(|j| {
                let theta = std::f64::consts::TAU * j as f64 / count as f64;
                let c = DVector::from_vec(vec![theta.cos(), theta.sin()]);
                (theta, self.contains(&c))
            })
            .collect())
    }

    /// Fraction of probed directions with `support(v) > 0` that are members.
    ///
    /// Equals 1 exactly when the direction space is the full open half-space,
    /// which characterizes C1 points.
    pub fn halfspace_fill(&self, probes: usize, seed: u64) -> f64 {
        let mut rng = sampling::rng(seed);
        let reduced = self.tangent.transpose() * &self.support;
        let mut hits = 0;
        let mut total = 0;
        for _ in 0..probes {
            let c = sampling::unit_vector(&mut rng, self.tangent.ncols());
            // Stay away from the bounding hyperplane where membership is marginal.
            let along = reduced.dot(&c) / reduced.norm().max(1e-300);
            if along < 0.05 {
                continue;
            }
            total += 1;
            if self.contains(&c) {
                hits += 1;
            }
        }
        if total == 0 {
            1.0
        } else {
            hits as f64 / total as f64
        }
    }
}

pub fn space_of_directions(body: &ConvexBody, p: &ProjPoint) -> Result<DirectionSpace> {
    let gens = body.supporting_covectors(&p.coords, 8, 0xd1)?;
    let base_point = body.lift(&p.coords).ok_or(Error::NotBoundary)?;
    let support = gens.iter().sum::<DVector<f64>>() / gens.len() as f64;
    let scale = (&base_point - &body.witness).norm().max(1e-6);
    Ok(DirectionSpace {
        body: body.clone(),
        base_point,
        tangent: body.tangent_basis().clone(),
        support,
        scale,
    })
}
