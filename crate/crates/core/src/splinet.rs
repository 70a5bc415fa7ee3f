//! Dyadic orthonormalization of B-spline bases.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::band::BandMatrix;
use crate::bspline::{build_basis, BSplineBasis};
use crate::error::{Result, SplineError};
use crate::knots::KnotVector;
use crate::ortho::sym_gram_schmidt_coords;
use crate::spline::Spline;
use crate::transform::{BasisTransform, Method};
use std::sync::Arc;

/// Shape of a dyadic net of `k`-tuplets over `N` support levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicLayout {
    pub levels: usize,
    pub order: usize,
}

/// Position of an element in the dyadic net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementLabel {
    pub level: usize,
    /// 1-based index of the tuplet within its level.
    pub index: usize,
    /// 0-based position within the tuplet.
    pub member: usize,
}

impl DyadicLayout {
    /// Layout for `count = k (2^N - 1)` elements.
    pub fn new(count: usize, order: usize) -> Result<Self> {
        let k = order.max(1);
        if count == 0 || !count.is_multiple_of(k) || !(count / k + 1).is_power_of_two() {
            return Err(SplineError::DyadicShape { count, order: k });
        }
        Ok(Self {
            levels: (count / k + 1).trailing_zeros() as usize,
            order: k,
        })
    }

    pub fn tuplet_count(&self) -> usize {
        (1 << self.levels) - 1
    }

    pub fn dim(&self) -> usize {
        self.order * self.tuplet_count()
    }

    /// Number of tuplets at `level`.
    pub fn level_size(&self, level: usize) -> usize {
        1 << (self.levels - level - 1)
    }

    /// Level and 1-based index of tuplet `t` in the sequence.
    pub fn tuplet_label(&self, t: usize) -> (usize, usize) {
        let level = (t + 1).trailing_zeros() as usize;
        (level, ((t + 1) >> level).div_ceil(2))
    }

    /// Sequence position of tuplet `index` (1-based) at `level`.
    pub fn tuplet_position(&self, index: usize, level: usize) -> usize {
        (1 << level) * (2 * index - 1) - 1
    }

    pub fn label(&self, element: usize) -> ElementLabel {
        let (level, index) = self.tuplet_label(element / self.order);
        ElementLabel {
            level,
            index,
            member: element % self.order,
        }
    }

    /// Knot indices of the left end, centre and right end of the interval of
    /// tuplet `index` (1-based) at `level`.
    pub fn interval(&self, index: usize, level: usize) -> (usize, usize, usize) {
        let k = self.order;
        let s = 1 << level;
        (2 * k * (index - 1) * s, (2 * k * index - k) * s, 2 * k * index * s)
    }

    /// Element indices still being processed after the steps for levels
    /// `0..=level` have removed their bottom rows.
    pub fn remaining_after(&self, level: usize) -> Vec<usize> {
        let k = self.order;
        (0..self.dim())
            .filter(|&r| {
                let t = r / k;
                (t + 1).trailing_zeros() as usize > level
            })
            .collect()
    }
}

/// An orthonormalized basis with its dyadic labels.
#[derive(Debug, Clone)]
pub struct Splinet {
    pub transform: BasisTransform,
    pub layout: DyadicLayout,
    pub labels: Vec<ElementLabel>,
    /// For a partial splinet, the last fully orthonormal level.
    pub stop_level: Option<usize>,
    /// Off-diagonal inner products between splines evaluated while building.
    pub inner_products: usize,
    pub splines: Vec<Spline>,
}

#[derive(Debug, Clone)]
struct Element {
    spline: Spline,
    coeffs: DVector<f64>,
}

fn combine(terms: &[(f64, &Element)]) -> Result<Element> {
    let weights: Vec<f64> = terms.iter().map(|(c, _)| *c).collect();
    let parts: Vec<&Spline> = terms.iter().map(|(_, e)| &e.spline).collect();
    let spline = Spline::linear_combination(&weights, &parts)?;
    let mut coeffs = DVector::zeros(terms[0].1.coeffs.len());
    for (c, e) in terms {
        coeffs.axpy(*c, &e.coeffs, 1.0);
    }
    Ok(Element { spline, coeffs })
}

/// Applies the symmetric Gram-Schmidt to one tuplet of elements.
fn orthonormalize_tuplet(members: &[Element], counter: &mut usize) -> Result<Vec<Element>> {
    let k = members.len();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        g[(i, i)] = members[i].spline.inner_product(&members[i].spline)?;
        for j in i + 1..k {
            let v = members[i].spline.inner_product(&members[j].spline)?;
            *counter += 1;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let c = sym_gram_schmidt_coords(&g)?;
    (0..k)
        .map(|m| {
            let terms: Vec<(f64, &Element)> = (0..k).map(|j| (c[(j, m)], &members[j])).collect();
            combine(&terms)
        })
        .collect()
}

/// Runs `iterations` steps of the dyadic recursion on spline objects. Rows
/// left unfinished are orthonormalized tuplet by tuplet.
pub fn dyadic_iterations(basis: &BSplineBasis, iterations: usize) -> Result<Splinet> {
    let layout = DyadicLayout::new(basis.len(), basis.order())?;
    let k = layout.order;
    let d = basis.len();
    let n_levels = layout.levels;
    let iterations = iterations.min(n_levels);
    let mut work: Vec<Element> = basis
        .splines()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut coeffs = DVector::zeros(d);
            coeffs[i] = 1.0;
            Element {
                spline: s.clone(),
                coeffs,
            }
        })
        .collect();
    let mut counter = 0usize;
    let tuplets = layout.tuplet_count();
    let level_of = |t: usize| (t + 1).trailing_zeros() as usize;

    for step in 0..iterations {
        for t in (0..tuplets).filter(|&t| level_of(t) == step) {
            let done = orthonormalize_tuplet(&work[t * k..(t + 1) * k], &mut counter)?;
            for (m, e) in done.into_iter().enumerate() {
                work[t * k + m] = e;
            }
        }
        let gap = 1usize << step;
        for t in (0..tuplets).filter(|&t| level_of(t) > step) {
            let (lo, hi) = (t - gap, t + gap);
            for m in 0..k {
                let x = &work[t * k + m];
                let mut terms: Vec<(f64, &Element)> = vec![(1.0, x)];
                for nb in [lo, hi] {
                    for j in 0..k {
                        let y = &work[nb * k + j];
                        let c = x.spline.inner_product(&y.spline)?;
                        counter += 1;
                        terms.push((-c, y));
                    }
                }
                let updated = combine(&terms)?;
                work[t * k + m] = updated;
            }
        }
    }
    if iterations < n_levels {
        let mut scratch = 0usize;
        for t in (0..tuplets).filter(|&t| level_of(t) >= iterations) {
            let done = orthonormalize_tuplet(&work[t * k..(t + 1) * k], &mut scratch)?;
            for (m, e) in done.into_iter().enumerate() {
                work[t * k + m] = e;
            }
        }
    }

    let mut coeffs = DMatrix::zeros(d, d);
    for (c, e) in work.iter().enumerate() {
        coeffs.set_column(c, &e.coeffs);
    }
    let partial = iterations + 1 < n_levels;
    Ok(Splinet {
        transform: BasisTransform::new(
            coeffs,
            if partial {
                Method::PartialSplinet
            } else {
                Method::Splinet
            },
        ),
        layout,
        labels: (0..d).map(|c| layout.label(c)).collect(),
        stop_level: if partial { iterations.checked_sub(1) } else { None },
        inner_products: counter,
        splines: work.into_iter().map(|e| e.spline).collect(),
    })
}

/// Full dyadic orthonormalization of a basis of `k (2^N - 1)` B-splines.
pub fn dyadic_orthogonalize(basis: &BSplineBasis) -> Result<Splinet> {
    let layout = DyadicLayout::new(basis.len(), basis.order())?;
    dyadic_iterations(basis, layout.levels)
}

/// Splinet stopped after level `stop_level`: rows up to it are fully
/// orthonormal, the rest are orthogonal to them and orthonormal only within
/// each tuplet.
pub fn partial_splinet(basis: &BSplineBasis, stop_level: usize) -> Result<Splinet> {
    let layout = DyadicLayout::new(basis.len(), basis.order())?;
    if stop_level >= layout.levels {
        return Err(SplineError::Dimension(format!(
            "stop level {stop_level} exceeds the top level {}",
            layout.levels - 1
        )));
    }
    dyadic_iterations(basis, stop_level + 1)
}

/// Symmetric block-tridiagonal Gram matrix over a list of tuplets.
struct BlockTridiagonal {
    diag: Vec<DMatrix<f64>>,
    /// `off[u]` couples position `u` (rows) with `u + 1` (columns).
    off: Vec<DMatrix<f64>>,
}

impl BlockTridiagonal {
    fn get(&self, a: usize, b: usize) -> Option<DMatrix<f64>> {
        if a == b {
            Some(self.diag[a].clone())
        } else if b == a + 1 {
            Some(self.off[a].clone())
        } else if a == b + 1 {
            Some(self.off[b].transpose())
        } else {
            None
        }
    }
}

/// Orthonormalizing transform for a positive definite matrix of size
/// `k (2^N - 1)` whose entries vanish beyond `k` off the diagonal. Columns
/// are ordered as the input indices.
pub fn band_diagonalize(h: &BandMatrix, order: usize) -> Result<BasisTransform> {
    let layout = DyadicLayout::new(h.dim(), order)?;
    let k = layout.order;
    if h.half_width() > k {
        return Err(SplineError::Bandwidth {
            half_width: h.half_width(),
            order: k,
        });
    }
    let d = h.dim();
    let mut a = DMatrix::<f64>::identity(d, d);
    let mut rows: Vec<(usize, usize)> = (0..layout.tuplet_count()).map(|t| (t * k, t * k + k)).collect();
    let mut cur: Vec<usize> = (0..layout.tuplet_count()).collect();
    let mut gram = BlockTridiagonal {
        diag: cur.iter().map(|&t| h.block(t * k, t * k, k)).collect(),
        off: cur
            .windows(2)
            .map(|w| h.block(w[0] * k, w[1] * k, k))
            .collect(),
    };
    let eye = DMatrix::<f64>::identity(k, k);
    loop {
        let m = cur.len();
        let mut b: Vec<Option<DMatrix<f64>>> = vec![None; m];
        let mut old: Vec<Option<DMatrix<f64>>> = vec![None; m];
        for u in (0..m).step_by(2) {
            let bu = sym_gram_schmidt_coords(&gram.diag[u])?;
            let t = cur[u];
            let (lo, hi) = rows[t];
            let block = a.view((lo, t * k), (hi - lo, k)).clone_owned();
            let updated = &block * &bu;
            a.view_mut((lo, t * k), (hi - lo, k)).copy_from(&updated);
            old[u] = Some(block);
            b[u] = Some(bu);
        }
        if m == 1 {
            break;
        }
        // flanking blocks of the transform for each upper tuplet
        let mut flank: Vec<Option<(DMatrix<f64>, DMatrix<f64>)>> = vec![None; m];
        for u in (1..m).step_by(2) {
            let bl = b[u - 1].as_ref().unwrap();
            let br = b[u + 1].as_ref().unwrap();
            let el = -(bl * (bl.transpose() * &gram.off[u - 1]));
            let er = -(br * (br.transpose() * gram.off[u].transpose()));
            let t = cur[u];
            let (tl, tr) = (cur[u - 1], cur[u + 1]);
            let (ol, or) = (old[u - 1].as_ref().unwrap(), old[u + 1].as_ref().unwrap());
            let lo = rows[t].0.min(rows[tl].0).min(rows[tr].0);
            let hi = rows[t].1.max(rows[tl].1).max(rows[tr].1);
            let mut block = DMatrix::zeros(hi - lo, k);
            let own = a.view((rows[t].0, t * k), (rows[t].1 - rows[t].0, k));
            block.rows_mut(rows[t].0 - lo, rows[t].1 - rows[t].0).copy_from(&own);
            let add_l = ol * &el;
            let mut part = block.rows_mut(rows[tl].0 - lo, rows[tl].1 - rows[tl].0);
            part += &add_l;
            let add_r = or * &er;
            let mut part = block.rows_mut(rows[tr].0 - lo, rows[tr].1 - rows[tr].0);
            part += &add_r;
            a.view_mut((lo, t * k), (hi - lo, k)).copy_from(&block);
            rows[t] = (lo, hi);
            flank[u] = Some((el, er));
        }
        // reduced Gram matrix of the upper tuplets
        let column = |u: usize| -> Vec<(usize, DMatrix<f64>)> {
            let (el, er) = flank[u].clone().unwrap();
            vec![(u - 1, el), (u, eye.clone()), (u + 1, er)]
        };
        let reduced = |u: usize, w: usize| -> DMatrix<f64> {
            let mut acc = DMatrix::zeros(k, k);
            for (ia, ea) in column(u) {
                for (ib, eb) in column(w) {
                    if let Some(hab) = gram.get(ia, ib) {
                        acc += ea.transpose() * hab * eb;
                    }
                }
            }
            acc
        };
        let uppers: Vec<usize> = (1..m).step_by(2).collect();
        let diag = uppers.iter().map(|&u| reduced(u, u)).collect();
        let off = uppers.windows(2).map(|w| reduced(w[0], w[1])).collect();
        gram = BlockTridiagonal { diag, off };
        cur = uppers.iter().map(|&u| cur[u]).collect();
    }
    Ok(BasisTransform::new(a, Method::BandDiagonalization))
}

/// A matrix padded with identity blocks to the next dyadic size.
#[derive(Debug, Clone, PartialEq)]
pub struct Submersion {
    pub matrix: BandMatrix,
    pub pad_top: usize,
    pub pad_bottom: usize,
    pub layout: DyadicLayout,
}

/// Pads an `m x m` Gram matrix of order-`k` splines (`n = m + k - 1`
/// internal knots) to size `k (2^N - 1)` with `N = ceil(log2((n + 1) / k))`.
pub fn submerge(h: &BandMatrix, order: usize) -> Result<Submersion> {
    let k = order.max(1);
    let m = h.dim();
    if m == 0 {
        return Err(SplineError::Dimension("empty Gram matrix".into()));
    }
    let n = m + k - 1;
    let mut levels = 1;
    while k << levels < n + 1 {
        levels += 1;
    }
    let d = k * ((1 << levels) - 1);
    let pad_top = (d - m) / 2;
    let pad_bottom = d - m - pad_top;
    let hw = h.half_width();
    let mut matrix = BandMatrix::zeros(d, hw);
    for i in 0..d {
        if i < pad_top || i >= pad_top + m {
            matrix.set(i, i, 1.0);
        }
    }
    for i in 0..m {
        for j in i..(i + hw + 1).min(m) {
            matrix.set(pad_top + i, pad_top + j, h.get(i, j));
        }
    }
    Ok(Submersion {
        matrix,
        pad_top,
        pad_bottom,
        layout: DyadicLayout::new(d, k)?,
    })
}

/// Splinet for any number of knots: the Gram matrix is submerged into a
/// dyadic one, diagonalized and the central block extracted.
pub fn general_splinet(knots: Arc<KnotVector>, order: usize) -> Result<Splinet> {
    let basis = build_basis(knots, order)?;
    splinet_of_basis(&basis)
}

/// As [`general_splinet`] for an already built basis.
pub fn splinet_of_basis(basis: &BSplineBasis) -> Result<Splinet> {
    let gram = basis.gram()?;
    let sub = submerge(&gram, basis.order())?;
    let full = band_diagonalize(&sub.matrix, basis.order())?;
    let m = basis.len();
    let p = full
        .coeffs
        .view((sub.pad_top, sub.pad_top), (m, m))
        .clone_owned();
    let transform = BasisTransform::new(p, Method::Splinet);
    let splines = transform.splines(basis)?;
    Ok(Splinet {
        labels: (0..m).map(|c| sub.layout.label(sub.pad_top + c)).collect(),
        layout: sub.layout,
        transform,
        stop_level: None,
        inner_products: 0,
        splines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knots::KnotVector;
    use approx::assert_abs_diff_eq;

    #[test]
    fn layout_labels_and_intervals() {
        let l = DyadicLayout::new(15, 1).unwrap();
        assert_eq!(l.levels, 4);
        assert_eq!(l.tuplet_label(0), (0, 1));
        assert_eq!(l.tuplet_label(1), (1, 1));
        assert_eq!(l.tuplet_label(7), (3, 1));
        assert_eq!(l.tuplet_label(13), (1, 4));
        assert_eq!(l.tuplet_position(4, 1), 13);
        assert_eq!(l.interval(1, 3), (0, 8, 16));
        assert_eq!(l.level_size(0), 8);
        assert_eq!(l.remaining_after(0), vec![1, 3, 5, 7, 9, 11, 13]);
        assert_eq!(l.remaining_after(1), vec![3, 7, 11]);
        assert!(DyadicLayout::new(20, 3).is_err());
    }

    #[test]
    fn submerge_sizes() {
        let h = BandMatrix::identity(98);
        let s = submerge(&h, 3).unwrap();
        assert_eq!(s.layout.levels, 6);
        assert_eq!(s.matrix.dim(), 189);
        assert_eq!((s.pad_top, s.pad_bottom), (45, 46));
        let s = submerge(&BandMatrix::identity(21), 3).unwrap();
        assert_eq!((s.matrix.dim(), s.pad_top, s.pad_bottom), (21, 0, 0));
    }

    #[test]
    fn hat_splinet_is_orthonormal() {
        let knots = Arc::new(KnotVector::equispaced(17, 0.0, 1.0).unwrap());
        let basis = build_basis(knots, 1).unwrap();
        let gram = basis.gram().unwrap();
        let sp = dyadic_orthogonalize(&basis).unwrap();
        assert!(sp.transform.orthonormality_residual(&gram) < 1e-12);
        let band = band_diagonalize(&gram, 1).unwrap();
        assert!((band.coeffs - &sp.transform.coeffs).amax() < 1e-12);
    }

    #[test]
    fn identity_is_left_alone() {
        let p = band_diagonalize(&BandMatrix::identity(21), 3).unwrap();
        assert_abs_diff_eq!((p.coeffs - DMatrix::<f64>::identity(21, 21)).amax(), 0.0);
    }
}
