use nalgebra::{DMatrix, DVector};

use crate::bspline::BSplineBasis;
use crate::error::Result;
use crate::splinet::{dyadic_iterations, dyadic_orthogonalize, partial_splinet, ElementLabel};

/// Squared L2 distance between an element of a partial splinet and the
/// matching element of the full splinet.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialError {
    pub label: ElementLabel,
    pub squared: f64,
}

fn quad_form(gram: &crate::band::BandMatrix, x: &DVector<f64>) -> f64 {
    let m = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
    let hx = gram.mul_dense(&m);
    x.iter().zip(hx.iter()).map(|(a, b)| a * b).sum()
}

/// Per-element `||OB - B~||^2` after `iterations` steps of the dyadic
/// recursion, measured through the Gram matrix of `basis`.
pub fn measure_partial_error(basis: &BSplineBasis, iterations: usize) -> Result<Vec<PartialError>> {
    let full = dyadic_orthogonalize(basis)?;
    let part = dyadic_iterations(basis, iterations)?;
    let gram = basis.gram()?;
    let (pf, pp) = (&full.transform.coeffs, &part.transform.coeffs);
    Ok((0..pf.ncols())
        .map(|c| PartialError {
            label: full.labels[c],
            squared: quad_form(&gram, &(pf.column(c) - pp.column(c))).max(0.0),
        })
        .collect())
}

/// `||y - sum_e <y, e> e||` over the elements `e` of the splinet stopped at
/// `stop_level`, with `y` given by its B-spline coefficients.
pub fn partial_reconstruction_error(
    basis: &BSplineBasis,
    stop_level: usize,
    y: &DVector<f64>,
) -> Result<f64> {
    let q = partial_splinet(basis, stop_level)?.transform.coeffs;
    let gram = basis.gram()?;
    let hy = gram.mul_dense(&DMatrix::from_column_slice(y.len(), 1, y.as_slice()));
    let proj = q.transpose() * hy;
    let residual = y - &q * proj.column(0);
    Ok(quad_form(&gram, &residual).max(0.0).sqrt())
}
