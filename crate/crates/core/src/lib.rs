//! Numerical Hilbert geometry on properly convex projective domains.
//!
//! Points live in homogeneous coordinates on `R^{n+1}`. Every body carries an
//! interior witness and a covector `omega` that is positive on its closure;
//! chords and distances are computed in the slice `omega = 1`, where the body
//! is a bounded convex set.

pub mod domain;
pub mod duality;
pub mod error;
pub mod groups;
pub mod horocusp;
pub mod hyperbolicity;
pub mod isometry;
pub mod linalg;
pub mod metric;
pub mod projlin;
pub mod sampling;

pub use domain::{Chord, ConvexBody, Location};
pub use error::{Error, Result};
pub use projlin::{ProjHyperplane, ProjMap, ProjPoint, Spectrum};
