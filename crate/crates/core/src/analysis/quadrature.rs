use crate::bspline::{superfluous_basis, superfluous_limit_basis};
use crate::error::{Result, SplineError};
use crate::knots::KnotVector;
use crate::spline::{same_knots, Spline};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and its derivative by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule over consecutive breakpoints.
pub fn integrate_pieces(breaks: &[f64], nodes: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(nodes);
    breaks
        .windows(2)
        .filter(|p| p[1] > p[0])
        .map(|p| {
            let (mid, half) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| wi * f(mid + half * xi))
                .sum::<f64>()
                * half
        })
        .sum()
}

/// Inner product by pointwise evaluation and `k + 2` Gauss nodes per
/// interval of the common support.
pub fn quadrature_inner_product(a: &Spline, b: &Spline) -> Result<f64> {
    if !same_knots(a.knots(), b.knots()) {
        return Err(SplineError::KnotMismatch);
    }
    let range = a.common_intervals(b);
    if range.is_empty() {
        return Ok(0.0);
    }
    let xi = &a.knots().values()[range.start..=range.end];
    let nodes = a.order().max(b.order()) + 2;
    let mut err = None;
    let v = integrate_pieces(xi, nodes, |t| match (a.evaluate(t), b.evaluate(t)) {
        (Ok(x), Ok(y)) => x * y,
        (Err(e), _) | (_, Err(e)) => {
            err = Some(e);
            0.0
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// For each element, the L2 distance between the B-spline over knots
/// extended by `k` steps of size `h` and its limit over repeated end knots,
/// together with the norm of the limit.
pub fn superfluous_distance(base: &KnotVector, order: usize, h: f64) -> Result<Vec<(f64, f64)>> {
    let near = superfluous_basis(base, order, h)?;
    let limit = superfluous_limit_basis(base, order)?;
    let breaks = near.knots().values().to_vec();
    let (lo, hi) = (base.first(), base.last());
    near.splines()
        .iter()
        .zip(limit.splines())
        .map(|(s, t)| {
            let diff = |x: f64| {
                let a = s.evaluate(x).unwrap_or(0.0);
                let b = if (lo..=hi).contains(&x) {
                    t.evaluate(x).unwrap_or(0.0)
                } else {
                    0.0
                };
                (a - b) * (a - b)
            };
            let dist = integrate_pieces(&breaks, order + 2, diff).sqrt();
            Ok((dist, t.norm()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::build_basis;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    #[test]
    fn rule_is_exact_for_polynomials() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n);
            for p in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p + 1) as f64 };
                assert_abs_diff_eq!(q, exact, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn hat_squared() {
        let knots = Arc::new(KnotVector::new(vec![0.0, 1.0, 2.0]).unwrap());
        let hat = build_basis(knots, 1).unwrap().get(0).clone();
        assert_abs_diff_eq!(quadrature_inner_product(&hat, &hat).unwrap(), 2.0 / 3.0, epsilon = 1e-14);
    }
}
