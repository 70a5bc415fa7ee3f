//! Orthonormal bases of splines.
//!
//! Splines are stored as matrices of derivatives at the knots. On top of
//! B-spline bases the crate builds orthonormal bases by one-sided and
//! two-sided Gram-Schmidt and by a dyadic scheme that keeps supports short
//! (splinets).

// `!(x > y)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod band;
pub mod bspline;
pub mod error;
pub mod io;
pub mod knots;
pub mod ortho;
pub mod smoothness;
pub mod spline;
pub mod splinet;
pub mod transform;

pub use band::BandMatrix;
pub use bspline::{build_basis, BSplineBasis, Tuplet};
pub use error::{Result, SplineError};
pub use knots::{BoundaryMode, KnotVector};
pub use ortho::Direction;
pub use spline::{Convention, Spline, Support};
pub use splinet::{DyadicLayout, ElementLabel, Splinet};
pub use transform::{BasisTransform, Method};
