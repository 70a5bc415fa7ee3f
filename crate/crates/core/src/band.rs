use nalgebra::DMatrix;

use crate::error::{Result, SplineError};

/// Symmetric band matrix stored by its main and upper diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    dim: usize,
    half_width: usize,
    /// `diags[o][i] = A[i, i + o]`
    diags: Vec<Vec<f64>>,
}

impl BandMatrix {
    pub fn zeros(dim: usize, half_width: usize) -> Self {
        let half_width = half_width.min(dim.saturating_sub(1));
        let diags = (0..=half_width).map(|o| vec![0.0; dim - o]).collect();
        Self {
            dim,
            half_width,
            diags,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, 0);
        m.diags[0].iter_mut().for_each(|x| *x = 1.0);
        m
    }

    /// Symmetric Toeplitz matrix with first row `row` (length = half width + 1).
    pub fn toeplitz(dim: usize, row: &[f64]) -> Self {
        let mut m = Self::zeros(dim, row.len().saturating_sub(1));
        for (o, d) in m.diags.iter_mut().enumerate() {
            d.iter_mut().for_each(|x| *x = row[o]);
        }
        m
    }

    /// Reads a symmetric matrix; asymmetry beyond `tol` relative to the
    /// largest entry is an error.
    pub fn from_dense(a: &DMatrix<f64>, tol: f64) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(SplineError::Dimension(format!(
                "matrix is {} x {}",
                a.nrows(),
                a.ncols()
            )));
        }
        let d = a.nrows();
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let mut hw = 0;
        for i in 0..d {
            for j in i..d {
                if (a[(i, j)] - a[(j, i)]).abs() > tol * scale {
                    return Err(SplineError::NotSymmetric { row: i, col: j });
                }
                if a[(i, j)] != 0.0 {
                    hw = hw.max(j - i);
                }
            }
        }
        let mut m = Self::zeros(d, hw);
        for i in 0..d {
            for j in i..(i + hw + 1).min(d) {
                m.set(i, j, 0.5 * (a[(i, j)] + a[(j, i)]));
            }
        }
        Ok(m)
    }

    /// Builds from `(row, col, value)` entries; each off-diagonal pair may be
    /// given once or twice.
    pub fn from_triplets(dim: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut a = DMatrix::zeros(dim, dim);
        let mut seen = DMatrix::from_element(dim, dim, false);
        for &(i, j, v) in entries {
            if i >= dim || j >= dim {
                return Err(SplineError::Dimension(format!(
                    "entry ({i}, {j}) outside a {dim} x {dim} matrix"
                )));
            }
            a[(i, j)] = v;
            seen[(i, j)] = true;
        }
        for i in 0..dim {
            for j in 0..dim {
                if seen[(i, j)] && !seen[(j, i)] {
                    a[(j, i)] = a[(i, j)];
                }
            }
        }
        Self::from_dense(&a, 1e-12)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let o = j - i;
        if o > self.half_width {
            0.0
        } else {
            self.diags[o][i]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let o = j - i;
        assert!(o <= self.half_width, "({i}, {j}) lies outside the band");
        self.diags[o][i] = v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Dense `k x k` block starting at `(r, c)`.
    pub fn block(&self, r: usize, c: usize, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(k, k, |i, j| self.get(r + i, c + j))
    }

    /// `A * x` for a dense `x`.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.dim {
                let lo = i.saturating_sub(self.half_width);
                let hi = (i + self.half_width + 1).min(self.dim);
                let mut acc = 0.0;
                for j in lo..hi {
                    acc += self.get(i, j) * x[(j, c)];
                }
                out[(i, c)] = acc;
            }
        }
        out
    }

    /// `max |P^T A P - I|`, skipping column pairs whose supports are apart.
    pub fn orthonormality_residual(&self, p: &DMatrix<f64>) -> f64 {
        let hp = self.mul_dense(p);
        let ranges: Vec<(usize, usize)> = (0..p.ncols()).map(|c| nonzero_rows(p, c)).collect();
        let hranges: Vec<(usize, usize)> = (0..hp.ncols()).map(|c| nonzero_rows(&hp, c)).collect();
        let mut worst = 0.0f64;
        for i in 0..p.ncols() {
            for j in 0..p.ncols() {
                let lo = ranges[i].0.max(hranges[j].0);
                let hi = ranges[i].1.min(hranges[j].1);
                let mut g = 0.0;
                for r in lo..hi.max(lo) {
                    g += p[(r, i)] * hp[(r, j)];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

/// Half-open range of rows holding the non-zero entries of column `c`.
pub(crate) fn nonzero_rows(p: &DMatrix<f64>, c: usize) -> (usize, usize) {
    let col = p.column(c);
    match col.iter().position(|&x| x != 0.0) {
        None => (0, 0),
        Some(lo) => (lo, col.iter().rposition(|&x| x != 0.0).unwrap() + 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let b = BandMatrix::from_dense(&a, 1e-12).unwrap();
        assert_eq!(b.half_width(), 1);
        assert_eq!(b.to_dense(), a);
        assert_eq!(b, BandMatrix::toeplitz(3, &[2.0, 1.0]));
    }

    #[test]
    fn rejects_asymmetry() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(
            BandMatrix::from_dense(&a, 1e-12),
            Err(SplineError::NotSymmetric { row: 0, col: 1 })
        ));
    }

    #[test]
    fn triplets_fill_symmetric_partner() {
        let b = BandMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (0, 1, 0.25)])
            .unwrap();
        assert_eq!(b.get(1, 0), 0.25);
        assert_eq!(b.orthonormality_residual(&DMatrix::identity(3, 3)), 0.25);
    }
}
