use thiserror::Error;

use crate::domain::BenzecriChart;

/// Errors raised by geometric operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("points are not collinear (rank test failed)")]
    NonCollinear,
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("matrix is singular (|det| = {0:e})")]
    Singular(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point is not in the interior of the domain")]
    NotInterior,
    #[error("point is not on the boundary of the domain")]
    NotBoundary,
    #[error("Benzecri normalization reached R = {achieved}, target was {target}")]
    TargetNotMet {
        target: f64,
        achieved: f64,
        best: Box<BenzecriChart>,
    },
    #[error("unknown example `{0}`")]
    UnknownExample(String),

    #[error("map does not preserve the domain")]
    NotAnIsometry,
    #[error("some eigenvalue has modulus different from 1 (max deviation {0:e})")]
    NotUnitModulus(f64),
    #[error("map is not hyperbolic")]
    NotHyperbolic,
    #[error("invariant pencil is degenerate: {0}")]
    DegeneratePencil(String),

    #[error("covector does not support the domain at the given point")]
    NotSupporting,
    #[error("open segment (p, r) is not contained in the domain")]
    SegmentNotInterior,
    #[error("vertical projection lies outside the radial shadow")]
    OutsideRadialShadow,
    #[error("map does not lie in the stabilizer of (H, p)")]
    NotInStabilizer,
    #[error("boundary point is not a C1 point")]
    NotC1Point,

    #[error("point is not in the open cone")]
    NotInCone,
    #[error("sublevel slice is empty")]
    EmptySlice,

    #[error("group ball exceeded its element budget ({0} elements)")]
    ExplosionGuard(usize),
    #[error("no common fixed point found")]
    NoneFound,
    #[error("search budget exhausted")]
    BudgetExhausted,
    #[error("a hyperbolic element is present")]
    HyperbolicPresent,

    #[error("triangle is degenerate")]
    DegenerateTriangle,
}

pub type Result<T> = std::result::Result<T, Error>;
