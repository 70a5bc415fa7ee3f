use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("knot vector invalid at index {index}: {reason}")]
    InvalidKnots { index: usize, reason: String },
    #[error("point {t} lies outside the knot range [{lo}, {hi}]")]
    Domain { t: f64, lo: f64, hi: f64 },
    #[error("operands are defined over different knot vectors")]
    KnotMismatch,
    #[error("order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("derivative of an order-0 spline is not defined")]
    ZeroOrderDerivative,
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("{count} elements cannot be grouped into a dyadic net of {order}-tuplets")]
    DyadicShape { count: usize, order: usize },
    #[error("numerical rank deficiency at pivot {index} (value {pivot:e})")]
    NumericalRank { index: usize, pivot: f64 },
    #[error("inner product {h} does not satisfy |h| < 1")]
    InnerProductRange { h: f64 },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("band half-width {half_width} exceeds the tuplet size {order}")]
    Bandwidth { half_width: usize, order: usize },
    #[error("smoothness residual {residual:e} exceeds tolerance {tolerance:e}")]
    Smoothness { residual: f64, tolerance: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

impl SplineError {
    /// True for failures caused by the numbers rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SplineError::NumericalRank { .. }
                | SplineError::InnerProductRange { .. }
                | SplineError::Smoothness { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, SplineError>;
