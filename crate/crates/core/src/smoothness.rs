//! Smoothness relations between consecutive rows of a derivative matrix.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SplineError};
use crate::knots::{BoundaryMode, KnotVector};
use crate::spline::{Convention, Spline, Support};

/// Relative factor in the smoothness tolerance `1e-9 * (1 + max|s|)`.
pub const SMOOTHNESS_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessReport {
    /// Largest discrepancy at each checked knot, keyed by knot index.
    pub residuals: Vec<(usize, f64)>,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl SmoothnessReport {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

/// Taylor-propagates the derivatives in `row` across a gap of length `h`,
/// returning the orders `0..k`.
pub fn propagate_row(row: &[f64], h: f64) -> Vec<f64> {
    let k = row.len() - 1;
    (0..k)
        .map(|r| {
            let mut term = 1.0;
            let mut acc = 0.0;
            for j in 0..=(k - r) {
                if j > 0 {
                    term *= h / j as f64;
                }
                acc += term * row[j + r];
            }
            acc
        })
        .collect()
}

/// Checks that each row follows from the previous one by Taylor expansion.
pub fn validate_smoothness(spline: &Spline) -> SmoothnessReport {
    let s = spline.to_one_sided();
    let Some(sup) = s.support() else {
        return SmoothnessReport {
            residuals: Vec::new(),
            max_residual: 0.0,
            tolerance: SMOOTHNESS_RTOL,
        };
    };
    let knots = s.knots().clone();
    let k = s.order();
    let scale = s.matrix().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tolerance = SMOOTHNESS_RTOL * (1.0 + scale);
    let superfluous = matches!(knots.mode(), BoundaryMode::Superfluous { .. });
    let last_knot = knots.len() - 1;
    let mut residuals = Vec::new();

    // continuity with the zero function to the left of the support
    let at_domain_start = knots.get(sup.offset) == knots.first();
    if !(superfluous && at_domain_start) {
        let r0 = s.row(0)[..k].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        residuals.push((sup.offset, r0));
    }
    for r in sup.offset..sup.end() {
        let h = knots.spacing(r);
        let next = r + 1;
        if h == 0.0 {
            continue;
        }
        if superfluous && (knots.get(next) == knots.last() || next == last_knot) {
            continue;
        }
        if next < last_knot && knots.spacing(next) == 0.0 {
            continue;
        }
        let pred = propagate_row(s.row(r - sup.offset), h);
        let actual = &s.row(next - sup.offset)[..k];
        let res = pred
            .iter()
            .zip(actual)
            .fold(0.0f64, |m, (p, a)| m.max((p - a).abs()));
        residuals.push((next, res));
    }
    let max_residual = residuals.iter().fold(0.0f64, |m, &(_, r)| m.max(r));
    SmoothnessReport {
        residuals,
        max_residual,
        tolerance,
    }
}

/// Free parameters that determine a spline matrix uniquely.
#[derive(Debug, Clone, PartialEq)]
pub enum FreeValues {
    /// Derivatives of order `0..k` at the first knot and the top derivative
    /// on each of the `n + 1` intervals.
    OneSided { first_row: Vec<f64>, top: Vec<f64> },
    /// Zero-boundary splines: top derivatives on the outer intervals counted
    /// inwards from each end, plus the leading central intervals. The
    /// remaining `k` central values follow from the right boundary.
    ZeroBoundarySplit {
        left: Vec<f64>,
        right: Vec<f64>,
        center: Vec<f64>,
    },
}

/// Sizes `(left, right, center)` expected by [`FreeValues::ZeroBoundarySplit`].
pub fn split_sizes(n: usize, k: usize) -> (usize, usize, usize) {
    let side = (n / 2 + 1).saturating_sub(k);
    let central = n + 1 - 2 * side;
    (side, side, central.saturating_sub(k))
}

fn rows_from_top(knots: &KnotVector, first_row: &[f64], top: &[f64]) -> Vec<f64> {
    let k = first_row.len();
    let n1 = knots.len();
    let w = k + 1;
    let mut m = vec![0.0; n1 * w];
    m[..k].copy_from_slice(first_row);
    m[k] = top[0];
    for r in 0..n1 - 1 {
        let next = propagate_row(&m[r * w..(r + 1) * w], knots.spacing(r));
        m[(r + 1) * w..(r + 1) * w + k].copy_from_slice(&next);
        m[(r + 1) * w + k] = if r + 1 < top.len() { top[r + 1] } else { 0.0 };
    }
    m
}

/// Fills a full-range derivative matrix from a minimal set of free values.
pub fn complete_matrix(knots: Arc<KnotVector>, order: usize, free: &FreeValues) -> Result<Spline> {
    let n = knots.internal_count();
    let k = order;
    let support = Support { offset: 0, len: n };
    match free {
        FreeValues::OneSided { first_row, top } => {
            if first_row.len() != k || top.len() != n + 1 {
                return Err(SplineError::Dimension(format!(
                    "expected {k} leading values and {} top derivatives, got {} and {}",
                    n + 1,
                    first_row.len(),
                    top.len()
                )));
            }
            let m = rows_from_top(&knots, first_row, top);
            Spline::new(knots, k, support, m, Convention::OneSided)
        }
        FreeValues::ZeroBoundarySplit {
            left,
            right,
            center,
        } => {
            if n < k {
                return Err(SplineError::Dimension(format!(
                    "{n} internal knots cannot carry order {k}"
                )));
            }
            let (nl, nr, nc) = split_sizes(n, k);
            if left.len() != nl || right.len() != nr || center.len() != nc {
                return Err(SplineError::Dimension(format!(
                    "expected split sizes ({nl}, {nr}, {nc}), got ({}, {}, {})",
                    left.len(),
                    right.len(),
                    center.len()
                )));
            }
            let mut top = vec![0.0; n + 1];
            top[..nl].copy_from_slice(left);
            for (j, v) in right.iter().enumerate() {
                top[n - j] = *v;
            }
            top[nl..nl + nc].copy_from_slice(center);
            let unknown: Vec<usize> = (nl + nc..nl + nc + k).collect();
            solve_right_boundary(&knots, k, &mut top, &unknown)?;
            let m = rows_from_top(&knots, &vec![0.0; k], &top);
            Ok(Spline::new(knots, k, support, m, Convention::OneSided)?.to_symmetric())
        }
    }
}

/// Chooses the top derivatives at `unknown` so that all lower derivatives
/// vanish at the last knot.
fn solve_right_boundary(
    knots: &KnotVector,
    k: usize,
    top: &mut [f64],
    unknown: &[usize],
) -> Result<()> {
    if k == 0 {
        return Ok(());
    }
    let end = knots.last();
    let fact: Vec<f64> = (0..=k)
        .scan(1.0, |f, j| {
            if j > 0 {
                *f *= j as f64;
            }
            Some(*f)
        })
        .collect();
    // derivative j at the end contributed by a unit top derivative on interval r
    let weight = |r: usize, j: usize| {
        let p = (k - j) as i32;
        ((end - knots.get(r)).powi(p) - (end - knots.get(r + 1)).powi(p)) / fact[k - j]
    };
    let mut a = DMatrix::zeros(k, k);
    let mut b = DVector::zeros(k);
    for j in 0..k {
        for (c, &r) in unknown.iter().enumerate() {
            a[(j, c)] = weight(r, j);
        }
        let known: f64 = (0..top.len())
            .filter(|r| !unknown.contains(r))
            .map(|r| top[r] * weight(r, j))
            .sum();
        b[j] = -known;
    }
    let x = a.lu().solve(&b).ok_or(SplineError::NumericalRank {
        index: unknown[0],
        pivot: 0.0,
    })?;
    for (c, &r) in unknown.iter().enumerate() {
        top[r] = x[c];
    }
    Ok(())
}

/// Matrix form of the smoothness relations over a full knot vector.
#[derive(Debug, Clone)]
pub struct SmoothnessSystem {
    knots: Arc<KnotVector>,
    order: usize,
}

impl SmoothnessSystem {
    pub fn new(knots: Arc<KnotVector>, order: usize) -> Self {
        Self { knots, order }
    }

    /// First differences: `(Pi x)_i = x_{i+1} - x_i`.
    pub fn difference(&self) -> DMatrix<f64> {
        let n1 = self.knots.len();
        DMatrix::from_fn(n1 - 1, n1, |i, j| {
            if j == i + 1 {
                1.0
            } else if j == i {
                -1.0
            } else {
                0.0
            }
        })
    }

    /// Selects derivative orders `0..k` (drops the top column).
    pub fn lower_selection(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.order + 1, self.order, |i, j| (i == j) as u8 as f64)
    }

    /// Selects derivative orders `1..=k` (drops the value column).
    pub fn upper_selection(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.order + 1, self.order, |i, j| (i == j + 1) as u8 as f64)
    }

    /// Row selector `e_i^T` over the knot rows.
    pub fn row_selector(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(1, self.knots.len(), |_, j| (j == i) as u8 as f64)
    }

    /// Lower-triangular `A_alpha` with `(r, c)` entry `alpha^(r-c+1)/(r-c+1)!`.
    pub fn taylor(&self, alpha: f64) -> DMatrix<f64> {
        let k = self.order;
        DMatrix::from_fn(k, k, |r, c| {
            if r < c {
                return 0.0;
            }
            let p = r - c + 1;
            alpha.powi(p as i32) / (1..=p).map(|x| x as f64).product::<f64>()
        })
    }

    /// Weights `f_ij = Delta_i^(j + 1/2) / j!` for each interval.
    pub fn interval_weights(&self) -> DMatrix<f64> {
        let k = self.order;
        DMatrix::from_fn(self.knots.len() - 1, k + 1, |i, j| {
            let h = self.knots.spacing(i);
            h.powf(j as f64 + 0.5) / (1..=j).map(|x| x as f64).product::<f64>()
        })
    }

    /// Residual of the relations for a full-range matrix in one-sided form:
    /// `e_{i+1} S P - e_i S P = (e_i S R) A'` where `A'` is the reversed
    /// Taylor block, checked knot by knot.
    pub fn residual(&self, spline: &Spline) -> Result<f64> {
        let s = spline.to_one_sided();
        let sup = s.support().ok_or(SplineError::Dimension("empty support".into()))?;
        let n1 = self.knots.len();
        if sup.offset != 0 || sup.rows() != n1 || s.order() != self.order {
            return Err(SplineError::Dimension(
                "residual needs a full-range matrix of matching order".into(),
            ));
        }
        let k = self.order;
        let full = DMatrix::from_row_slice(n1, k + 1, s.matrix());
        let diff = self.difference() * &full * self.lower_selection();
        let up = &full * self.upper_selection();
        let mut worst = 0.0f64;
        for i in 0..n1 - 1 {
            let h = self.knots.spacing(i);
            // column r of the increment is sum_{c >= r} h^(c-r+1)/(c-r+1)! * s_{i, c+1}
            let rhs = up.row(i) * self.taylor(h);
            for r in 0..k {
                worst = worst.max((diff[(i, r)] - rhs[r]).abs());
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hat_from_top_derivatives() {
        let knots = Arc::new(KnotVector::equispaced(5, 0.0, 4.0).unwrap());
        // first-order spline rising on (1, 2], falling on (2, 3]
        let free = FreeValues::OneSided {
            first_row: vec![0.0],
            top: vec![0.0, 1.0, -1.0, 0.0],
        };
        let s = complete_matrix(knots, 1, &free).unwrap();
        let col0: Vec<f64> = (0..5).map(|r| s.entry(r, 0)).collect();
        assert_eq!(col0, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(validate_smoothness(&s).passed());
    }

    #[test]
    fn detects_broken_row() {
        let knots = Arc::new(KnotVector::equispaced(5, 0.0, 4.0).unwrap());
        let free = FreeValues::OneSided {
            first_row: vec![0.0],
            top: vec![0.0, 1.0, -1.0, 0.0],
        };
        let s = complete_matrix(knots.clone(), 1, &free).unwrap();
        let mut m = s.matrix().to_vec();
        m[2 * 2] += 1e-3;
        let broken = Spline::new(knots, 1, s.support().unwrap(), m, Convention::OneSided).unwrap();
        let report = validate_smoothness(&broken);
        assert!(!report.passed());
        assert!(report.residuals.iter().any(|&(i, r)| i == 2 && r > 9e-4));
    }

    #[test]
    fn zero_boundary_split_closes_at_the_end() {
        let knots = Arc::new(KnotVector::equispaced(12, 0.0, 1.0).unwrap());
        let n = knots.internal_count();
        for k in 1..=3 {
            let (l, r, c) = split_sizes(n, k);
            assert_eq!(l + r + c, n + 1 - k);
            let free = FreeValues::ZeroBoundarySplit {
                left: (0..l).map(|i| (i as f64).sin()).collect(),
                right: (0..r).map(|i| (i as f64 + 0.5).cos()).collect(),
                center: (0..c).map(|i| 1.0 + i as f64).collect(),
            };
            let s = complete_matrix(knots.clone(), k, &free).unwrap();
            assert_eq!(s.convention(), Convention::Symmetric);
            let report = validate_smoothness(&s);
            assert!(report.passed(), "k={k}: {report:?}");
        }
    }

    #[test]
    fn matrix_form_agrees_with_rowwise_check() {
        let knots = Arc::new(KnotVector::new(vec![0.0, 0.3, 0.45, 0.8, 1.0]).unwrap());
        let free = FreeValues::OneSided {
            first_row: vec![0.0, 0.0],
            top: vec![1.0, -2.0, 3.0, 0.5],
        };
        let s = complete_matrix(knots.clone(), 2, &free).unwrap();
        let sys = SmoothnessSystem::new(knots, 2);
        assert!(sys.residual(&s).unwrap() < 1e-14);
        assert_abs_diff_eq!(sys.taylor(2.0)[(1, 0)], 2.0);
        assert_eq!(sys.interval_weights().ncols(), 3);
    }
}
