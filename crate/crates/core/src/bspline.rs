use std::sync::Arc;

use crate::band::BandMatrix;
use crate::error::{Result, SplineError};
use crate::knots::KnotVector;
use crate::spline::{Convention, Spline, Support};

/// B-splines of one order over a knot vector, ordered by support offset.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    knots: Arc<KnotVector>,
    order: usize,
    splines: Vec<Spline>,
}

/// `k` consecutive basis elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tuplet {
    pub index: usize,
    pub start: usize,
    pub len: usize,
}

impl Tuplet {
    pub fn members(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

impl BSplineBasis {
    pub fn from_splines(knots: Arc<KnotVector>, order: usize, splines: Vec<Spline>) -> Self {
        Self {
            knots,
            order,
            splines,
        }
    }

    pub fn knots(&self) -> &Arc<KnotVector> {
        &self.knots
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn splines(&self) -> &[Spline] {
        &self.splines
    }

    pub fn len(&self) -> usize {
        self.splines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.splines.is_empty()
    }

    pub fn get(&self, i: usize) -> &Spline {
        &self.splines[i]
    }

    /// Banded Gram matrix of the basis.
    pub fn gram(&self) -> Result<BandMatrix> {
        let d = self.len();
        let hw = self.order.min(d.saturating_sub(1));
        let mut band = BandMatrix::zeros(d, hw);
        for i in 0..d {
            for j in i..(i + hw + 1).min(d) {
                band.set(i, j, self.splines[i].inner_product(&self.splines[j])?);
            }
        }
        Ok(band)
    }

    /// Values of every element at `t`.
    pub fn evaluate_all(&self, t: f64) -> Result<Vec<f64>> {
        self.splines.iter().map(|s| s.evaluate(t)).collect()
    }
}

/// Indicators of `(xi_l, xi_{l+1}]` for `l = 0..=n`.
pub fn zero_order_basis(knots: Arc<KnotVector>) -> BSplineBasis {
    let splines = (0..knots.len() - 1)
        .map(|l| {
            Spline::new(
                knots.clone(),
                0,
                Support { offset: l, len: 0 },
                vec![1.0, 0.0],
                Convention::OneSided,
            )
            .expect("indicator fits the knot vector")
        })
        .collect();
    BSplineBasis::from_splines(knots, 0, splines)
}

/// One step of the recurrence applied to whole derivative matrices.
pub fn raise_order(basis: &BSplineBasis) -> Result<BSplineBasis> {
    let knots = basis.knots.clone();
    let k = basis.order + 1;
    if basis.len() < 2 {
        return Err(SplineError::Dimension(format!(
            "order {k} needs more internal knots than {}",
            knots.internal_count()
        )));
    }
    let xi = knots.values();
    let w = k + 1;
    let mut out = Vec::with_capacity(basis.len() - 1);
    for l in 0..basis.len() - 1 {
        let (lo, hi) = (&basis.splines[l], &basis.splines[l + 1]);
        let d1 = xi[l + k] - xi[l];
        let d2 = xi[l + 1] - xi[l + k + 1];
        let mut matrix = vec![0.0; (k + 2) * w];
        for g in l..=l + k + 1 {
            // derivative j of order k-1 at global knot g, zero outside the support
            let fetch = |s: &Spline, j: usize| -> f64 {
                if j >= k {
                    return 0.0;
                }
                match s.support() {
                    Some(sup) if g >= sup.offset && g <= sup.end() => s.entry(g - sup.offset, j),
                    _ => 0.0,
                }
            };
            for j in 0..=k {
                let jf = j as f64;
                let mut v = 0.0;
                if d1 != 0.0 {
                    let prev = if j > 0 { fetch(lo, j - 1) } else { 0.0 };
                    v += (jf * prev + (xi[g] - xi[l]) * fetch(lo, j)) / d1;
                }
                if d2 != 0.0 {
                    let prev = if j > 0 { fetch(hi, j - 1) } else { 0.0 };
                    v += (jf * prev + (xi[g] - xi[l + k + 1]) * fetch(hi, j)) / d2;
                }
                matrix[(g - l) * w + j] = v;
            }
        }
        out.push(Spline::new(
            knots.clone(),
            k,
            Support { offset: l, len: k },
            matrix,
            Convention::OneSided,
        )?);
    }
    Ok(BSplineBasis::from_splines(knots, k, out))
}

/// The `n + 1 - k` B-splines of order `k`.
pub fn build_basis(knots: Arc<KnotVector>, order: usize) -> Result<BSplineBasis> {
    let n = knots.internal_count();
    if n < order {
        return Err(SplineError::Dimension(format!(
            "order {order} needs at least {order} internal knots, got {n}"
        )));
    }
    let mut basis = zero_order_basis(knots);
    for _ in 0..order {
        basis = raise_order(&basis)?;
    }
    Ok(basis)
}

/// Derivatives `0..=k` at `t` of the polynomial piece that every B-spline
/// `B_{l,k}` takes on interval `(xi_r, xi_{r+1}]`, computed pointwise from
/// the recurrence. Terms with a zero denominator are dropped.
///
/// Returns one vector per `l = 0..len-k-1`.
pub fn piece_derivatives(knots: &[f64], order: usize, r: usize, t: f64) -> Vec<Vec<f64>> {
    let count0 = knots.len() - 1;
    let mut cur: Vec<Vec<f64>> = (0..count0)
        .map(|l| vec![if l == r { 1.0 } else { 0.0 }])
        .collect();
    for k in 1..=order {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for l in 0..cur.len() - 1 {
            let d1 = knots[l + k] - knots[l];
            let d2 = knots[l + k + 1] - knots[l + 1];
            let mut v = vec![0.0; k + 1];
            for (i, vi) in v.iter_mut().enumerate() {
                let at = |s: &Vec<f64>, j: usize| s.get(j).copied().unwrap_or(0.0);
                let fi = i as f64;
                if d1 != 0.0 {
                    let prev = if i > 0 { at(&cur[l], i - 1) } else { 0.0 };
                    *vi += (fi * prev + (t - knots[l]) * at(&cur[l], i)) / d1;
                }
                if d2 != 0.0 {
                    let prev = if i > 0 { at(&cur[l + 1], i - 1) } else { 0.0 };
                    *vi += (-fi * prev + (knots[l + k + 1] - t) * at(&cur[l + 1], i)) / d2;
                }
            }
            next.push(v);
        }
        cur = next;
    }
    cur
}

/// Value of every `B_{l,k}` at `t`, evaluated pointwise.
pub fn evaluate_recurrence(knots: &[f64], order: usize, t: f64) -> Vec<f64> {
    let lo = knots[0];
    let hi = knots[knots.len() - 1];
    if t < lo || t > hi {
        return vec![0.0; knots.len() - 1 - order];
    }
    let r = if t == lo {
        knots.iter().rposition(|&x| x == lo).unwrap()
    } else {
        knots.partition_point(|&x| x < t) - 1
    };
    piece_derivatives(knots, order, r, t)
        .into_iter()
        .map(|v| v[0])
        .collect()
}

/// B-splines of order `k` over the knots with both ends repeated `k` more
/// times, stored over that repeated knot vector.
pub fn superfluous_limit_basis(base: &KnotVector, order: usize) -> Result<BSplineBasis> {
    let knots = Arc::new(KnotVector::superfluous(base.values(), order)?);
    let xi = knots.values();
    let count = xi.len() - 1 - order;
    let w = order + 1;
    let last = knots.len() - 1;
    let positive: Vec<usize> = (0..last).filter(|&r| knots.spacing(r) > 0.0).collect();
    let mut rows: Vec<Vec<f64>> = vec![vec![0.0; count * w]; knots.len()];
    for &r in &positive {
        let d = piece_derivatives(xi, order, r, xi[r]);
        for (l, v) in d.iter().enumerate() {
            rows[r][l * w..(l + 1) * w].copy_from_slice(v);
        }
    }
    // repeated knots inherit the right-hand limit of the next positive interval
    for g in (0..last).rev() {
        if knots.spacing(g) == 0.0 && xi[g] != knots.last() {
            rows[g] = rows[g + 1].clone();
        }
    }
    let mut splines = Vec::with_capacity(count);
    for l in 0..count {
        let (s, e) = (l, l + order + 1);
        let mut m = Vec::with_capacity((e - s + 1) * w);
        for row in rows.iter().take(e + 1).skip(s) {
            m.extend_from_slice(&row[l * w..(l + 1) * w]);
        }
        splines.push(Spline::new(
            knots.clone(),
            order,
            Support {
                offset: s,
                len: e - s - 1,
            },
            m,
            Convention::OneSided,
        )?);
    }
    Ok(BSplineBasis::from_splines(knots, order, splines))
}

/// B-splines of order `k` over the knots extended by `k` extra knots spaced
/// `h` apart on each side.
pub fn superfluous_basis(base: &KnotVector, order: usize, h: f64) -> Result<BSplineBasis> {
    if !(h > 0.0) {
        return Err(SplineError::Dimension(format!(
            "extension step must be positive, got {h}"
        )));
    }
    let xi = base.values();
    let mut values: Vec<f64> = (0..order)
        .map(|i| xi[0] - (order - i) as f64 * h)
        .collect();
    values.extend_from_slice(xi);
    values.extend((1..=order).map(|i| base.last() + i as f64 * h));
    build_basis(Arc::new(KnotVector::new(values)?), order)
}

/// Splits a basis of `k (2^N - 1)` elements into consecutive `k`-tuplets.
pub fn group_tuplets(count: usize, order: usize) -> Result<Vec<Tuplet>> {
    let k = order.max(1);
    if count == 0 || !count.is_multiple_of(k) || !(count / k + 1).is_power_of_two() {
        return Err(SplineError::DyadicShape {
            count,
            order: k,
        });
    }
    Ok((0..count / k)
        .map(|i| Tuplet {
            index: i,
            start: i * k,
            len: k,
        })
        .collect())
}
