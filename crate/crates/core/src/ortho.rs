//! Gram-Schmidt variants and the one- and two-sided orthonormal spline bases.

use nalgebra::{DMatrix, DVector};

use crate::bspline::BSplineBasis;
use crate::error::{Result, SplineError};
use crate::spline::Spline;
use crate::transform::{BasisTransform, Method};

/// Pivots below this fraction of the largest diagonal entry signal rank loss.
pub const PIVOT_RTOL: f64 = 1e-13;

/// Gram-Schmidt in the coordinates of the vectors themselves: returns upper
/// triangular `T` with `T^T H T = I` where `H` is the Gram matrix of the
/// vectors. Zero entries of `H` are skipped.
pub fn gram_schmidt_coords(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let nb = h.nrows();
    if h.ncols() != nb {
        return Err(SplineError::Dimension(format!(
            "Gram matrix is {} x {}",
            nb,
            h.ncols()
        )));
    }
    let scale = (0..nb).fold(0.0f64, |m, i| m.max(h[(i, i)].abs()));
    let mut h = h.clone();
    let mut t = DMatrix::<f64>::identity(nb, nb);
    let mut rows: Vec<(usize, usize)> = (0..nb).map(|i| (i, i + 1)).collect();
    for i in 0..nb {
        let p = h[(i, i)];
        if !(p > PIVOT_RTOL * scale) {
            return Err(SplineError::NumericalRank { index: i, pivot: p });
        }
        let linked: Vec<(usize, f64)> = (i + 1..nb)
            .filter_map(|j| {
                let v = h[(i, j)];
                (v != 0.0).then_some((j, v))
            })
            .collect();
        let (lo, hi) = rows[i];
        for &(j, v) in &linked {
            let c = v / p;
            for r in lo..hi {
                let x = t[(r, i)];
                t[(r, j)] -= c * x;
            }
            rows[j] = (rows[j].0.min(lo), rows[j].1.max(hi));
        }
        for &(j, vj) in &linked {
            for &(l, vl) in &linked {
                h[(j, l)] -= vj * vl / p;
            }
        }
        let s = p.sqrt();
        for r in lo..hi {
            t[(r, i)] /= s;
        }
    }
    Ok(t)
}

/// Gram-Schmidt on the columns of `a`, which hold vectors in a basis with
/// Gram matrix `gram`. The result is in the same basis.
pub fn gram_schmidt(a: &DMatrix<f64>, gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let h = a.transpose() * gram * a;
    Ok(a * gram_schmidt_coords(&h)?)
}

/// Symmetric orthonormalization of a normalized pair with inner product `h`.
pub fn sym_pair(x: &DVector<f64>, y: &DVector<f64>, h: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    let (a1, a2) = sym_pair_weights(h)?;
    Ok((a1 * x + a2 * y, a2 * x + a1 * y))
}

/// Weights `(a1, a2)` of the symmetric pair orthonormalization.
pub fn sym_pair_weights(h: f64) -> Result<(f64, f64)> {
    if !(h.abs() < 1.0) {
        return Err(SplineError::InnerProductRange { h });
    }
    let p = 1.0 / (1.0 + h).sqrt();
    let m = 1.0 / (1.0 - h).sqrt();
    Ok(((p + m) / 2.0, (p - m) / 2.0))
}

/// An involutive isometry.
pub trait SymmetryAction {
    fn apply(&self, v: &DVector<f64>) -> DVector<f64>;
}

/// Reverses the order of coordinates. On coefficients of B-splines over
/// mirror-symmetric knots this is the reflection of the function.
#[derive(Debug, Clone, Copy, Default)]
pub struct IndexReversal;

impl SymmetryAction for IndexReversal {
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = v.len();
        DVector::from_fn(n, |i, _| v[n - 1 - i])
    }
}

/// Which construction produced a symmetric pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryCase {
    /// Both inputs were already invariant.
    Invariant,
    /// `(x + T y, T x + y)`.
    Sum,
    /// `(x - T y, T x - y)`.
    Difference,
}

fn independent(x: &DVector<f64>, y: &DVector<f64>) -> bool {
    let (xx, yy, xy) = (x.dot(x), y.dot(y), x.dot(y));
    xx > 0.0 && yy > 0.0 && xx * yy - xy * xy > 1e-12 * xx * yy
}

/// Builds from an independent pair a pair swapped by `action`.
pub fn symmetrize_pair(
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    action: &dyn SymmetryAction,
) -> Result<(DVector<f64>, DVector<f64>, SymmetryCase)> {
    if !independent(x0, y0) {
        return Err(SplineError::NumericalRank { index: 1, pivot: 0.0 });
    }
    let (tx, ty) = (action.apply(x0), action.apply(y0));
    let tol = 1e-12;
    if (&tx - x0).norm() <= tol * x0.norm() && (&ty - y0).norm() <= tol * y0.norm() {
        return Ok((x0.clone(), y0.clone(), SymmetryCase::Invariant));
    }
    let (xs, ys) = (x0 + &ty, &tx + y0);
    if independent(&xs, &ys) {
        return Ok((xs, ys, SymmetryCase::Sum));
    }
    let (xd, yd) = (x0 - &ty, &tx - y0);
    if independent(&xd, &yd) {
        return Ok((xd, yd, SymmetryCase::Difference));
    }
    Err(SplineError::NumericalRank { index: 0, pivot: 0.0 })
}

/// Symmetric Gram-Schmidt in vector coordinates: returns `T` with
/// `T^T H T = I`, built pairwise from the outside inwards.
pub fn sym_gram_schmidt_coords(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let nb = h.nrows();
    let np = nb / 2;
    let mut left = Vec::with_capacity(nb);
    let mut right = Vec::with_capacity(2 * np);
    for i in 0..np {
        left.extend([i, nb - 1 - i]);
        right.extend([nb - 1 - i, i]);
    }
    if nb % 2 == 1 {
        left.push(np);
    }
    let permuted = |order: &[usize]| DMatrix::from_fn(order.len(), order.len(), |i, j| h[(order[i], order[j])]);
    let tl = gram_schmidt_coords(&permuted(&left))?;
    let tr = gram_schmidt_coords(&permuted(&right))?;
    // lift back to the original coordinates
    let lift = |t: &DMatrix<f64>, order: &[usize], col: usize| {
        let mut v = DVector::zeros(nb);
        for (pos, &orig) in order.iter().enumerate() {
            v[orig] = t[(pos, col)];
        }
        v
    };
    let mut out = DMatrix::zeros(nb, nb);
    for i in 0..np {
        let x = lift(&tl, &left, 2 * i);
        let y = lift(&tr, &right, 2 * i);
        let hxy = x.dot(&(h * &y));
        let (u, v) = sym_pair(&x, &y, hxy)?;
        out.set_column(i, &u);
        out.set_column(nb - 1 - i, &v);
    }
    if nb % 2 == 1 {
        out.set_column(np, &lift(&tl, &left, nb - 1));
    }
    Ok(out)
}

/// Symmetric Gram-Schmidt on the columns of `a` in a basis with Gram `gram`.
pub fn sym_gram_schmidt(a: &DMatrix<f64>, gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let h = a.transpose() * gram * a;
    Ok(a * sym_gram_schmidt_coords(&h)?)
}

/// Processing direction for one-sided Gram-Schmidt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

fn permute_sym(h: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(order.len(), order.len(), |i, j| h[(order[i], order[j])])
}

/// Gram-Schmidt over the basis in index order or its reverse. Column `i` of
/// the result comes from `B_i`.
pub fn one_sided_osplines(basis: &BSplineBasis, dir: Direction) -> Result<BasisTransform> {
    let gram = basis.gram()?.to_dense();
    let d = basis.len();
    let (coeffs, method) = match dir {
        Direction::LeftToRight => (gram_schmidt_coords(&gram)?, Method::GramSchmidtLeftRight),
        Direction::RightToLeft => {
            let order: Vec<usize> = (0..d).rev().collect();
            let t = gram_schmidt_coords(&permute_sym(&gram, &order))?;
            (
                DMatrix::from_fn(d, d, |i, j| t[(d - 1 - i, d - 1 - j)]),
                Method::GramSchmidtRightLeft,
            )
        }
    };
    Ok(BasisTransform::new(coeffs, method))
}

/// Index groups used by the two-sided construction: splines left of the
/// central knot, the ones whose support strictly contains it, and the
/// ones to its right.
pub fn two_sided_groups(basis: &BSplineBasis) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let c = basis.knots().central_knot();
    let k = basis.order();
    let mut left = Vec::new();
    let mut center = Vec::new();
    let mut right = Vec::new();
    for l in 0..basis.len() {
        if l + k < c {
            left.push(l);
        } else if l < c {
            center.push(l);
        } else {
            right.push(l);
        }
    }
    (left, center, right)
}

/// Left-to-right Gram-Schmidt up to the central knot, right-to-left from the
/// other end, then the straddling splines are projected off both sides and
/// orthonormalized symmetrically.
pub fn two_sided_osplines(basis: &BSplineBasis) -> Result<BasisTransform> {
    let gram = basis.gram()?.to_dense();
    let d = basis.len();
    let (left, center, right) = two_sided_groups(basis);
    let mut p = DMatrix::zeros(d, d);

    let tl = gram_schmidt_coords(&permute_sym(&gram, &left))?;
    for (a, &ia) in left.iter().enumerate() {
        for (b, &ib) in left.iter().enumerate() {
            p[(ia, ib)] = tl[(a, b)];
        }
    }
    let rev: Vec<usize> = right.iter().rev().copied().collect();
    let tr = gram_schmidt_coords(&permute_sym(&gram, &rev))?;
    for (a, &ia) in rev.iter().enumerate() {
        for (b, &ib) in rev.iter().enumerate() {
            p[(ia, ib)] = tr[(a, b)];
        }
    }

    if !center.is_empty() {
        let sides: Vec<usize> = left.iter().chain(rev.iter()).copied().collect();
        // centre splines with the side components removed
        let mut x = DMatrix::zeros(d, center.len());
        for (c, &ic) in center.iter().enumerate() {
            x[(ic, c)] = 1.0;
        }
        for &s in &sides {
            let col = p.column(s).clone_owned();
            let g = &gram * &col;
            for c in 0..center.len() {
                let coef = g.dot(&x.column(c));
                if coef != 0.0 {
                    x.column_mut(c).axpy(-coef, &col, 1.0);
                }
            }
        }
        let y = sym_gram_schmidt(&x, &gram)?;
        for (c, &ic) in center.iter().enumerate() {
            p.set_column(ic, &y.column(c));
        }
    }
    Ok(BasisTransform::new(p, Method::TwoSided))
}

/// Classical Gram-Schmidt carried out on spline objects. Only pairs whose
/// supports overlap on an interval of positive length are paired, and the
/// number of such inner products is returned alongside the result.
pub fn one_sided_splines(basis: &BSplineBasis, dir: Direction) -> Result<(Vec<Spline>, usize)> {
    let d = basis.len();
    let order: Vec<usize> = match dir {
        Direction::LeftToRight => (0..d).collect(),
        Direction::RightToLeft => (0..d).rev().collect(),
    };
    let mut done: Vec<Spline> = Vec::with_capacity(d);
    let mut count = 0;
    for (pos, &i) in order.iter().enumerate() {
        let b = basis.get(i);
        let mut coeffs = vec![1.0];
        let mut parts = vec![b];
        for prev in &done {
            if b.common_intervals(prev).is_empty() {
                continue;
            }
            count += 1;
            coeffs.push(-b.inner_product(prev)?);
            parts.push(prev);
        }
        let x = Spline::linear_combination(&coeffs, &parts)?;
        let norm = x.norm();
        if !(norm > 0.0) {
            return Err(SplineError::NumericalRank { index: pos, pivot: norm });
        }
        done.push(x.scaled(1.0 / norm));
    }
    if dir == Direction::RightToLeft {
        done.reverse();
    }
    Ok((done, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn residual(t: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
        (t.transpose() * h * t - DMatrix::identity(h.nrows(), h.nrows())).amax()
    }

    #[test]
    fn two_by_two_gram_schmidt() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 1.0]);
        let b = gram_schmidt(&DMatrix::identity(2, 2), &h).unwrap();
        assert_abs_diff_eq!(b[(0, 0)], 1.0);
        let s = (15.0f64 / 16.0).sqrt();
        assert_abs_diff_eq!(b[(0, 1)], -0.25 / s, epsilon = 1e-15);
        assert_abs_diff_eq!(b[(1, 1)], 1.0 / s, epsilon = 1e-15);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            gram_schmidt_coords(&h),
            Err(SplineError::NumericalRank { index: 1, .. })
        ));
    }

    #[test]
    fn sym_pair_examples() {
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let y = DVector::from_vec(vec![0.0, 1.0]);
        let (u, v) = sym_pair(&x, &y, 0.0).unwrap();
        assert_eq!((u, v), (x.clone(), y.clone()));
        assert!(sym_pair(&x, &y, 1.0).is_err());
        let (a1, a2) = sym_pair_weights(0.5).unwrap();
        assert_abs_diff_eq!(a1 * a1 + a2 * a2 + 2.0 * a1 * a2 * 0.5, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn symmetrize_picks_sum_then_difference() {
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        let (x, y, case) = symmetrize_pair(&e1, &e2, &IndexReversal).unwrap();
        assert_eq!(case, SymmetryCase::Sum);
        assert_eq!(x, 2.0 * &e1);
        assert_eq!(y, 2.0 * &e2);
        let (x, y, case) = symmetrize_pair(&e1, &(-&e2), &IndexReversal).unwrap();
        assert_eq!(case, SymmetryCase::Difference);
        assert_eq!(IndexReversal.apply(&x), y);
        let s = DVector::from_vec(vec![1.0, 1.0]);
        let z = DVector::from_vec(vec![1.0, 2.0, 1.0]);
        let w = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert_eq!(symmetrize_pair(&z, &w, &IndexReversal).unwrap().2, SymmetryCase::Invariant);
        assert!(symmetrize_pair(&s, &s, &IndexReversal).is_err());
    }

    #[test]
    fn symmetric_gram_schmidt_is_orthonormal_and_mirrored() {
        // Gram matrix invariant under index reversal
        for nb in 1..=6 {
            let h = DMatrix::from_fn(nb, nb, |i, j| {
                let d = (i as f64 - j as f64).abs();
                1.0 / (1.0 + d * d) + if i == j { 0.5 } else { 0.0 }
            });
            let t = sym_gram_schmidt_coords(&h).unwrap();
            assert!(residual(&t, &h) < 1e-13, "nb={nb}");
            for i in 0..nb {
                for j in 0..nb {
                    assert_abs_diff_eq!(t[(i, j)], t[(nb - 1 - i, nb - 1 - j)], epsilon = 1e-13);
                }
            }
        }
    }
}
