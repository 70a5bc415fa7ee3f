use std::sync::Arc;

use crate::bspline::build_basis;
use crate::error::{Result, SplineError};
use crate::knots::KnotVector;
use crate::ortho::{one_sided_splines, Direction};
use crate::splinet::dyadic_orthogonalize;
use crate::transform::Method;

/// Closed-form predictions next to the count observed while running.
#[derive(Debug, Clone, PartialEq)]
pub struct CountReport {
    pub method: Method,
    /// The closed form as stated for the method.
    pub predicted: f64,
    /// Exact count of the pairs the algorithm has to visit.
    pub exact: f64,
    pub instrumented: usize,
}

/// `nk - 3k^2/2 + k/2`: pairs of one-sided Gram-Schmidt with overlapping
/// supports.
pub fn one_sided_count(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    n * k - 1.5 * k * k + 0.5 * k
}

/// `(5k - 1)/2 k 2^(N-1) - (3k^2 - k + 2N k^2)`.
pub fn splinet_count_stated(levels: usize, k: usize) -> f64 {
    let (nn, k) = (levels as f64, k as f64);
    (5.0 * k - 1.0) / 2.0 * k * 2f64.powi(levels as i32 - 1) - (3.0 * k * k - k + 2.0 * nn * k * k)
}

/// Within-tuplet pairs on every tuplet plus `2k^2` projections for each
/// tuplet at every level below its own.
pub fn splinet_count_exact(levels: usize, k: usize) -> f64 {
    let tuplets = (1usize << levels) - 1;
    let within = (k * (k - 1) / 2 * tuplets) as f64;
    let projections: usize = (0..levels).map(|l| l * (1usize << (levels - 1 - l))).sum();
    within + (2 * k * k * projections) as f64
}

/// Runs `method` on equispaced B-splines with `n` internal knots and counts
/// the off-diagonal inner products it evaluates.
pub fn count_inner_products(method: Method, n: usize, k: usize) -> Result<CountReport> {
    let dyadic = k > 0 && (n + 1).is_multiple_of(k) && ((n + 1) / k).is_power_of_two() && (n + 1) / k >= 2;
    if !dyadic {
        return Err(SplineError::DyadicShape {
            count: (n + 1).saturating_sub(k),
            order: k,
        });
    }
    let levels = ((n + 1) / k).trailing_zeros() as usize;
    let knots = Arc::new(KnotVector::equispaced(n + 2, 0.0, 1.0)?);
    let basis = build_basis(knots, k)?;
    match method {
        Method::GramSchmidtLeftRight | Method::GramSchmidtRightLeft => {
            let dir = if method == Method::GramSchmidtLeftRight {
                Direction::LeftToRight
            } else {
                Direction::RightToLeft
            };
            let (_, count) = one_sided_splines(&basis, dir)?;
            Ok(CountReport {
                method,
                predicted: one_sided_count(n, k),
                exact: one_sided_count(n, k),
                instrumented: count,
            })
        }
        Method::Splinet => Ok(CountReport {
            method,
            predicted: splinet_count_stated(levels, k),
            exact: splinet_count_exact(levels, k),
            instrumented: dyadic_orthogonalize(&basis)?.inner_products,
        }),
        other => Err(SplineError::Dimension(format!(
            "no inner-product count for method {}",
            other.tag()
        ))),
    }
}
