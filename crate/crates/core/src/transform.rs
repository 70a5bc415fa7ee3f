use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::band::{nonzero_rows, BandMatrix};
use crate::bspline::BSplineBasis;
use crate::error::Result;
use crate::spline::Spline;

/// How a transform was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GramSchmidtLeftRight,
    GramSchmidtRightLeft,
    TwoSided,
    Splinet,
    PartialSplinet,
    BandDiagonalization,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::GramSchmidtLeftRight => "gs-lr",
            Method::GramSchmidtRightLeft => "gs-rl",
            Method::TwoSided => "twosided",
            Method::Splinet => "splinet",
            Method::PartialSplinet => "partial-splinet",
            Method::BandDiagonalization => "band",
        }
    }
}

/// Coefficients `P` with `OB_i = sum_j P[j, i] B_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTransform {
    pub coeffs: DMatrix<f64>,
    pub method: Method,
}

impl BasisTransform {
    pub fn new(coeffs: DMatrix<f64>, method: Method) -> Self {
        Self { coeffs, method }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Half-open row range of the structurally non-zero coefficients of each
    /// column; `None` for an all-zero column.
    pub fn column_supports(&self) -> Vec<Option<(usize, usize)>> {
        (0..self.coeffs.ncols())
            .map(|c| {
                let (lo, hi) = nonzero_rows(&self.coeffs, c);
                (hi > lo).then_some((lo, hi))
            })
            .collect()
    }

    /// Non-zero entries of column `c` as `(row, value)` pairs.
    pub fn sparse_column(&self, c: usize) -> Vec<(usize, f64)> {
        self.coeffs
            .column(c)
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(r, v)| (r, *v))
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.coeffs.iter().filter(|v| **v != 0.0).count()
    }

    /// `max |P^T H P - I|` for the Gram matrix `H` of the source basis.
    pub fn orthonormality_residual(&self, gram: &BandMatrix) -> f64 {
        gram.orthonormality_residual(&self.coeffs)
    }

    /// The transformed elements as splines.
    pub fn splines(&self, basis: &BSplineBasis) -> Result<Vec<Spline>> {
        (0..self.dim())
            .map(|c| {
                let col = self.sparse_column(c);
                if col.is_empty() {
                    return Ok(Spline::zero(basis.knots().clone(), basis.order()));
                }
                let coeffs: Vec<f64> = col.iter().map(|(_, v)| *v).collect();
                let parts: Vec<&Spline> = col.iter().map(|(r, _)| basis.get(*r)).collect();
                Spline::linear_combination(&coeffs, &parts)
            })
            .collect()
    }
}
