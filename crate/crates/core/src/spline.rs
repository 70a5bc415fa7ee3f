use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SplineError};
use crate::knots::KnotVector;

/// Where the top-order derivative is read at a knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Right-hand limits everywhere; the row at the last knot of the range
    /// holds zero.
    OneSided,
    /// Right-hand limits in the left half of the knots and left-hand limits
    /// in the right half.
    Symmetric,
}

/// Knots `xi_i ..= xi_{i+m+1}` carrying the non-trivial rows of a spline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Support {
    pub offset: usize,
    /// Number of knots strictly inside the support.
    pub len: usize,
}

impl Support {
    pub fn rows(&self) -> usize {
        self.len + 2
    }

    /// Index of the last knot of the support.
    pub fn end(&self) -> usize {
        self.offset + self.len + 1
    }
}

/// A piecewise polynomial of order `k` stored by its derivatives at knots.
///
/// Row `r` holds `S^(j)(xi_{i+r})` for `j = 0..=k`; under the one-sided
/// convention row `r` is the Taylor expansion used on `(xi_{i+r}, xi_{i+r+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    knots: Arc<KnotVector>,
    order: usize,
    support: Option<Support>,
    matrix: Vec<f64>,
    convention: Convention,
}

fn factorials(k: usize) -> Vec<f64> {
    let mut f = vec![1.0; k + 1];
    for j in 1..=k {
        f[j] = f[j - 1] * j as f64;
    }
    f
}

fn binomial(n: usize, j: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..j {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

pub(crate) fn same_knots(a: &Arc<KnotVector>, b: &Arc<KnotVector>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl Spline {
    /// Builds a spline from its row-major derivative matrix over `support`.
    pub fn new(
        knots: Arc<KnotVector>,
        order: usize,
        support: Support,
        matrix: Vec<f64>,
        convention: Convention,
    ) -> Result<Self> {
        if support.end() >= knots.len() {
            return Err(SplineError::Dimension(format!(
                "support ends at knot {} but only {} knots exist",
                support.end(),
                knots.len()
            )));
        }
        if matrix.len() != support.rows() * (order + 1) {
            return Err(SplineError::Dimension(format!(
                "expected {} x {} matrix, got {} entries",
                support.rows(),
                order + 1,
                matrix.len()
            )));
        }
        Ok(Self {
            knots,
            order,
            support: Some(support),
            matrix,
            convention,
        })
    }

    /// The zero spline, which has an empty support.
    pub fn zero(knots: Arc<KnotVector>, order: usize) -> Self {
        Self {
            knots,
            order,
            support: None,
            matrix: Vec::new(),
            convention: Convention::OneSided,
        }
    }

    pub fn knots(&self) -> &Arc<KnotVector> {
        &self.knots
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn support(&self) -> Option<Support> {
        self.support
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_none()
    }

    /// Derivative `j` stored at support row `r`.
    pub fn entry(&self, r: usize, j: usize) -> f64 {
        self.matrix[r * (self.order + 1) + j]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let w = self.order + 1;
        &self.matrix[r * w..(r + 1) * w]
    }

    /// Support as a closed interval of knot values.
    pub fn support_interval(&self) -> Option<(f64, f64)> {
        self.support
            .map(|s| (self.knots.get(s.offset), self.knots.get(s.end())))
    }

    /// Whether the global knot index `g` falls in the left half, where the
    /// symmetric convention stores right-hand limits.
    fn is_left_half(&self, g: usize) -> bool {
        2 * g <= self.knots.internal_count()
    }

    /// Symmetric position left undefined for odd `n`; it always holds zero.
    fn middle_gap(&self) -> Option<usize> {
        let n = self.knots.internal_count();
        (n % 2 == 1).then_some(n.div_ceil(2))
    }

    /// Same spline with the top derivative stored as right-hand limits.
    pub fn to_one_sided(&self) -> Spline {
        if self.convention == Convention::OneSided || self.support.is_none() {
            return Spline {
                convention: Convention::OneSided,
                ..self.clone()
            };
        }
        let s = self.support.unwrap();
        let k = self.order;
        let mut out = self.clone();
        out.convention = Convention::OneSided;
        for r in 0..s.rows() {
            let g = s.offset + r;
            let v = if self.is_left_half(g) {
                self.entry(r, k)
            } else if r + 1 < s.rows() {
                // right limit at g is the left limit at g + 1
                self.entry(r + 1, k)
            } else {
                0.0
            };
            out.matrix[r * (k + 1) + k] = v;
        }
        out
    }

    /// Same spline with the top derivative stored under the symmetric
    /// convention.
    pub fn to_symmetric(&self) -> Spline {
        if self.convention == Convention::Symmetric || self.support.is_none() {
            return Spline {
                convention: Convention::Symmetric,
                ..self.clone()
            };
        }
        let s = self.support.unwrap();
        let k = self.order;
        let gap = self.middle_gap();
        let mut out = self.clone();
        out.convention = Convention::Symmetric;
        for r in 0..s.rows() {
            let g = s.offset + r;
            let v = if self.is_left_half(g) {
                self.entry(r, k)
            } else if Some(g) == gap {
                0.0
            } else if r > 0 {
                // left limit at g is the right limit at g - 1
                self.entry(r - 1, k)
            } else {
                0.0
            };
            out.matrix[r * (k + 1) + k] = v;
        }
        out
    }

    fn one_sided(&self) -> std::borrow::Cow<'_, Spline> {
        match self.convention {
            Convention::OneSided => std::borrow::Cow::Borrowed(self),
            Convention::Symmetric => std::borrow::Cow::Owned(self.to_one_sided()),
        }
    }

    /// Value at `t`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        let r = self.knots.interval_of(t)?;
        let Some(s) = self.support else {
            return Ok(0.0);
        };
        if r < s.offset || r >= s.end() {
            return Ok(0.0);
        }
        let this = self.one_sided();
        let row = this.row(r - s.offset);
        let dt = t - self.knots.get(r);
        // Horner on sum_l dt^l / l! * row[l]
        let mut acc = 0.0;
        for l in (0..=self.order).rev() {
            acc = acc * dt / (l + 1) as f64 + row[l];
        }
        Ok(acc)
    }

    /// Values at many points.
    pub fn evaluate_many(&self, ts: &[f64]) -> Result<Vec<f64>> {
        ts.iter().map(|&t| self.evaluate(t)).collect()
    }

    fn check_compatible(&self, other: &Spline) -> Result<()> {
        if !same_knots(&self.knots, &other.knots) {
            return Err(SplineError::KnotMismatch);
        }
        if self.order != other.order {
            return Err(SplineError::OrderMismatch {
                left: self.order,
                right: other.order,
            });
        }
        Ok(())
    }

    /// Drops leading and trailing rows that are exactly zero.
    fn trimmed(mut self) -> Spline {
        let Some(s) = self.support else {
            return self;
        };
        let w = self.order + 1;
        let nonzero = |r: usize| self.matrix[r * w..(r + 1) * w].iter().any(|&x| x != 0.0);
        let Some(first) = (0..s.rows()).find(|&r| nonzero(r)) else {
            self.support = None;
            self.matrix.clear();
            return self;
        };
        let last_nonzero = (0..s.rows()).rev().find(|&r| nonzero(r)).unwrap();
        // the support closes at the knot after the last non-trivial interval
        let last = (last_nonzero + 1).min(s.rows() - 1).max(first + 1);
        if first == 0 && last == s.rows() - 1 {
            return self;
        }
        self.matrix = self.matrix[first * w..(last + 1) * w].to_vec();
        self.support = Some(Support {
            offset: s.offset + first,
            len: last - first - 1,
        });
        self
    }

    /// `sum_i coeffs[i] * splines[i]` over the union of the supports.
    pub fn linear_combination(coeffs: &[f64], splines: &[&Spline]) -> Result<Spline> {
        if coeffs.len() != splines.len() || splines.is_empty() {
            return Err(SplineError::Dimension(format!(
                "{} coefficients for {} splines",
                coeffs.len(),
                splines.len()
            )));
        }
        let head = splines[0];
        for s in &splines[1..] {
            head.check_compatible(s)?;
        }
        let mut lo = usize::MAX;
        let mut hi = 0;
        for s in splines.iter().filter_map(|s| s.support) {
            lo = lo.min(s.offset);
            hi = hi.max(s.end());
        }
        if lo == usize::MAX {
            return Ok(Spline::zero(head.knots.clone(), head.order));
        }
        let w = head.order + 1;
        let mut matrix = vec![0.0; (hi - lo + 1) * w];
        for (&c, s) in coeffs.iter().zip(splines) {
            let Some(sup) = s.support else { continue };
            if c == 0.0 {
                continue;
            }
            let this = s.one_sided();
            let shift = (sup.offset - lo) * w;
            for (dst, src) in matrix[shift..shift + this.matrix.len()]
                .iter_mut()
                .zip(&this.matrix)
            {
                *dst += c * src;
            }
        }
        Ok(Spline {
            knots: head.knots.clone(),
            order: head.order,
            support: Some(Support {
                offset: lo,
                len: hi - lo - 1,
            }),
            matrix,
            convention: Convention::OneSided,
        }
        .trimmed())
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Spline, b: f64) -> Result<Spline> {
        Spline::linear_combination(&[a, b], &[self, other])
    }

    pub fn scaled(&self, c: f64) -> Spline {
        let mut out = self.clone();
        out.matrix.iter_mut().for_each(|x| *x *= c);
        if c == 0.0 {
            out.support = None;
            out.matrix.clear();
        }
        out
    }

    /// The same function moved from the knot range onto `x -> a + (b - a) x`.
    pub fn rescale(&self, a: f64, b: f64) -> Result<Spline> {
        if !(b > a) {
            return Err(SplineError::Dimension(format!("empty target range [{a}, {b}]")));
        }
        let scale = b - a;
        let knots = Arc::new(self.knots.affine(a, scale)?);
        let w = self.order + 1;
        let factors: Vec<f64> = (0..w).map(|j| scale.powi(-(j as i32))).collect();
        let mut matrix = self.matrix.clone();
        for (i, x) in matrix.iter_mut().enumerate() {
            *x *= factors[i % w];
        }
        Ok(Spline {
            knots,
            matrix,
            ..self.clone()
        })
    }

    /// First derivative, a spline of order `k - 1`.
    pub fn derivative(&self) -> Result<Spline> {
        if self.order == 0 {
            return Err(SplineError::ZeroOrderDerivative);
        }
        let this = self.one_sided();
        let w = self.order + 1;
        let matrix: Vec<f64> = this
            .matrix
            .chunks(w)
            .flat_map(|row| row[1..].iter().copied())
            .collect();
        Ok(Spline {
            knots: self.knots.clone(),
            order: self.order - 1,
            support: self.support,
            matrix,
            convention: Convention::OneSided,
        }
        .trimmed())
    }

    /// Pointwise product, of order `k + k'`, supported on the intersection.
    pub fn multiply(&self, other: &Spline) -> Result<Spline> {
        if !same_knots(&self.knots, &other.knots) {
            return Err(SplineError::KnotMismatch);
        }
        let order = self.order + other.order;
        let (Some(a), Some(b)) = (self.support, other.support) else {
            return Ok(Spline::zero(self.knots.clone(), order));
        };
        let lo = a.offset.max(b.offset);
        let hi = a.end().min(b.end());
        if lo >= hi {
            return Ok(Spline::zero(self.knots.clone(), order));
        }
        let (x, y) = (self.one_sided(), other.one_sided());
        let w = order + 1;
        let mut matrix = vec![0.0; (hi - lo + 1) * w];
        for g in lo..=hi {
            let rx = x.row(g - a.offset);
            let ry = y.row(g - b.offset);
            let out = &mut matrix[(g - lo) * w..(g - lo + 1) * w];
            for (u, o) in out.iter_mut().enumerate() {
                let jmin = u.saturating_sub(other.order);
                let jmax = u.min(self.order);
                *o = (jmin..=jmax)
                    .map(|j| binomial(u, j) * rx[j] * ry[u - j])
                    .sum();
            }
        }
        Ok(Spline {
            knots: self.knots.clone(),
            order,
            support: Some(Support {
                offset: lo,
                len: hi - lo - 1,
            }),
            matrix,
            convention: Convention::OneSided,
        }
        .trimmed())
    }

    /// Knot intervals where both supports overlap with positive length.
    pub fn common_intervals(&self, other: &Spline) -> std::ops::Range<usize> {
        match (self.support, other.support) {
            (Some(a), Some(b)) => {
                let lo = a.offset.max(b.offset);
                let hi = a.end().min(b.end());
                lo..hi.max(lo)
            }
            _ => 0..0,
        }
    }

    /// L2 inner product together with the number of knot intervals whose
    /// rows were read.
    pub fn inner_product_counted(&self, other: &Spline) -> Result<(f64, usize)> {
        self.check_compatible(other)?;
        let range = self.common_intervals(other);
        if range.is_empty() {
            return Ok((0.0, 0));
        }
        let (a, b) = (self.support.unwrap(), other.support.unwrap());
        let (x, y) = (self.one_sided(), other.one_sided());
        let k = self.order;
        let fact = factorials(k);
        let mut f = vec![0.0; k + 1];
        let mut u = vec![0.0; k + 1];
        let mut v = vec![0.0; k + 1];
        let mut total = 0.0;
        let mut visited = 0;
        for r in range {
            let h = self.knots.spacing(r);
            visited += 1;
            if h == 0.0 {
                continue;
            }
            let sh = h.sqrt();
            let mut p = sh;
            for j in 0..=k {
                f[j] = p / fact[j];
                p *= h;
            }
            let rx = x.row(r - a.offset);
            let ry = y.row(r - b.offset);
            for j in 0..=k {
                u[j] = f[j] * rx[j];
                v[j] = f[j] * ry[j];
            }
            // full convolution weighted by 1 / (p + 1)
            for (i, ui) in u.iter().enumerate() {
                if *ui == 0.0 {
                    continue;
                }
                for (j, vj) in v.iter().enumerate() {
                    total += ui * vj / (i + j + 1) as f64;
                }
            }
        }
        Ok((total, visited))
    }

    /// L2 inner product over the common support.
    pub fn inner_product(&self, other: &Spline) -> Result<f64> {
        self.inner_product_counted(other).map(|(v, _)| v)
    }

    pub fn norm(&self) -> f64 {
        self.inner_product(self).unwrap_or(0.0).max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hat() -> Spline {
        let knots = Arc::new(KnotVector::new(vec![0.0, 1.0, 2.0]).unwrap());
        Spline::new(
            knots,
            1,
            Support { offset: 0, len: 1 },
            vec![0.0, 1.0, 1.0, -1.0, 0.0, 0.0],
            Convention::OneSided,
        )
        .unwrap()
    }

    #[test]
    fn hat_evaluates_piecewise_linear() {
        let s = hat();
        assert_abs_diff_eq!(s.evaluate(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(s.evaluate(0.5).unwrap(), 0.5);
        assert_abs_diff_eq!(s.evaluate(1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(s.evaluate(1.5).unwrap(), 0.5);
        assert_abs_diff_eq!(s.evaluate(2.0).unwrap(), 0.0);
        assert!(s.evaluate(2.5).is_err());
    }

    #[test]
    fn hat_norm_and_derivative() {
        let s = hat();
        assert_abs_diff_eq!(s.inner_product(&s).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        let d = s.derivative().unwrap();
        assert_eq!(d.order(), 0);
        assert_abs_diff_eq!(d.evaluate(0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(d.evaluate(1.5).unwrap(), -1.0);
        assert!(d.derivative().is_err());
    }

    #[test]
    fn cancellation_gives_empty_support() {
        let s = hat();
        let z = s.axpby(1.0, &s, -1.0).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.evaluate(0.7).unwrap(), 0.0);
        let same = s.axpby(1.0, &Spline::zero(s.knots().clone(), 1), 0.0).unwrap();
        assert_eq!(same, s);
    }

    #[test]
    fn rescale_scales_derivative_columns() {
        let s = hat();
        let r = s.rescale(0.0, 2.0).unwrap();
        assert_abs_diff_eq!(r.entry(0, 1), 0.5);
        assert_abs_diff_eq!(r.evaluate(2.0).unwrap(), 1.0);
        assert_abs_diff_eq!(r.knots().last(), 4.0);
    }

    #[test]
    fn product_of_disjoint_supports_is_zero() {
        let knots = Arc::new(KnotVector::equispaced(6, 0.0, 5.0).unwrap());
        let a = Spline::new(
            knots.clone(),
            1,
            Support { offset: 0, len: 1 },
            vec![0.0, 1.0, 1.0, -1.0, 0.0, 0.0],
            Convention::OneSided,
        )
        .unwrap();
        let b = Spline::new(
            knots,
            1,
            Support { offset: 2, len: 1 },
            vec![0.0, 1.0, 1.0, -1.0, 0.0, 0.0],
            Convention::OneSided,
        )
        .unwrap();
        assert!(a.multiply(&b).unwrap().is_zero());
        assert_eq!(a.inner_product_counted(&b).unwrap(), (0.0, 0));
    }

    #[test]
    fn product_of_hats_matches_pointwise() {
        let s = hat();
        let p = s.multiply(&s).unwrap();
        assert_eq!(p.order(), 2);
        for t in [0.1, 0.4, 0.9, 1.3, 1.8] {
            let v = s.evaluate(t).unwrap();
            assert_abs_diff_eq!(p.evaluate(t).unwrap(), v * v, epsilon = 1e-14);
        }
    }

    #[test]
    fn symmetric_round_trip() {
        let knots = Arc::new(KnotVector::equispaced(5, 0.0, 4.0).unwrap());
        let s = Spline::new(
            knots,
            1,
            Support { offset: 0, len: 3 },
            vec![0.0, 1.0, 1.0, 2.0, 3.0, -3.0, 0.0, -1.0, 0.0, 0.0],
            Convention::OneSided,
        )
        .unwrap();
        let sym = s.to_symmetric();
        // n = 3 is odd: the zero moves to the middle position (index 2)
        let col: Vec<f64> = (0..5).map(|r| sym.entry(r, 1)).collect();
        assert_eq!(col, vec![1.0, 2.0, 0.0, -3.0, -1.0]);
        assert_eq!(sym.to_one_sided(), s);
        for t in [0.3, 1.7, 2.2, 3.9] {
            assert_eq!(sym.evaluate(t).unwrap(), s.evaluate(t).unwrap());
        }
    }

    #[test]
    fn symmetric_even_duplicates_middle() {
        let knots = Arc::new(KnotVector::equispaced(4, 0.0, 3.0).unwrap());
        let s = Spline::new(
            knots,
            1,
            Support { offset: 0, len: 2 },
            vec![0.0, 1.0, 1.0, 5.0, 6.0, -6.0, 0.0, 0.0],
            Convention::OneSided,
        )
        .unwrap();
        let sym = s.to_symmetric();
        // n = 2 is even: the value at index n/2 = 1 is repeated at index 2
        let col: Vec<f64> = (0..4).map(|r| sym.entry(r, 1)).collect();
        assert_eq!(col, vec![1.0, 5.0, 5.0, -6.0]);
        assert_eq!(sym.to_one_sided(), s);
    }
}
