use std::sync::Arc;

use crate::error::Result;
use crate::knots::KnotVector;
use crate::spline::{Convention, Spline, Support};

/// Decay of the inner products `h_l` between a first-order element and its
/// reflection, and the error bounds built on it.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    h: Vec<f64>,
}

impl ErrorModel {
    /// `a = 8 (2 sqrt 2 - 1) / 15`.
    pub fn a() -> f64 {
        8.0 * (2.0 * 2f64.sqrt() - 1.0) / 15.0
    }

    /// `h_0 .. h_levels` from `h_0 = 1/4`,
    /// `h_{l+1} = -(sqrt 2 - 1/2) h_l^2 / (1 - h_l^2)`.
    pub fn new(levels: usize) -> Self {
        let c = 2f64.sqrt() - 0.5;
        let mut h = vec![0.25];
        for l in 0..levels {
            let x = h[l] * h[l];
            h.push(-c * x / (1.0 - x));
        }
        Self { h }
    }

    /// `h_0 .. h_levels` from `h_{l+1} = -h_l^2 / (1 - 2 h_l^2)`, the
    /// recursion followed by the inner products of an actual first-order
    /// equispaced splinet.
    pub fn consistent(levels: usize) -> Self {
        let mut h = vec![0.25];
        for l in 0..levels {
            let x = h[l] * h[l];
            h.push(-x / (1.0 - 2.0 * x));
        }
        Self { h }
    }

    pub fn levels(&self) -> usize {
        self.h.len() - 1
    }

    /// `h_l`; zero beyond the computed levels, where it has underflowed in
    /// practice.
    pub fn h(&self, l: usize) -> f64 {
        self.h.get(l).copied().unwrap_or(0.0)
    }

    /// `||OB_{i,l+1} - B~_{i,l+1}||^2 = 4 h_l^2 / (1 + sqrt(1 - 2 h_l^2))`.
    pub fn error_bound(&self, l: usize) -> f64 {
        let h2 = self.h(l).powi(2);
        4.0 * h2 / (1.0 + (1.0 - 2.0 * h2).sqrt())
    }

    /// `8 (4 - sqrt 14) / a^2 (a/4)^(2^(l+1))`.
    pub fn closed_bound(&self, l: usize) -> f64 {
        let a = Self::a();
        8.0 * (4.0 - 14f64.sqrt()) / (a * a) * (a / 4.0).powf(2f64.powi(l as i32 + 1))
    }

    /// `(a/4)^(2^l)`.
    pub fn decay_factor(l: usize) -> f64 {
        (Self::a() / 4.0).powf(2f64.powi(l as i32))
    }

    fn tail(l: usize, r: usize) -> f64 {
        (0..r.saturating_sub(l))
            .map(Self::decay_factor)
            .fold(0.0, |a, b| a + b)
    }

    /// Bound on `||OB_{i,r} - B~_{i,r}||` for a splinet stopped at level `l`.
    pub fn pair_deviation_bound(&self, l: usize, r: usize) -> f64 {
        let a = Self::a();
        2.0 * (2.0 * (4.0 - 14f64.sqrt())).sqrt() / a * Self::decay_factor(l) * Self::tail(l, r)
    }

    /// `K_{N,l}`.
    pub fn total_constant(levels: usize, l: usize) -> f64 {
        let a = Self::a();
        let sum: f64 = (l + 1..levels)
            .map(|r| Self::tail(l, r) / 2f64.powi(r as i32 + 1))
            .fold(0.0, |a, b| a + b);
        2f64.powi(levels as i32 + 1) * (2.0 * (4.0 - 14f64.sqrt())).sqrt() / a * sum
    }

    /// `K_{N,l} (a/4)^(2^l) ||y||`.
    pub fn total_error_bound(levels: usize, l: usize, norm_y: f64) -> f64 {
        Self::total_constant(levels, l) * Self::decay_factor(l) * norm_y
    }

    /// Smallest stop level whose total bound for a unit `y` is within
    /// `tolerance`.
    pub fn recommend_stop_level(levels: usize, tolerance: f64) -> usize {
        let top = levels.saturating_sub(1);
        (0..top)
            .find(|&l| Self::total_error_bound(levels, l, 1.0) <= tolerance)
            .unwrap_or(top)
    }
}

/// `<G, G~>` for a first-order spline with unit-spaced knot values `g` and
/// its reflection, by the closed sums.
pub fn hat_inner_formula(g: &[f64]) -> f64 {
    let l = g.len() - 2;
    let two_thirds: f64 = (0..=l).map(|j| g[j] * g[l + 1 - j]).sum();
    let upper: f64 = (1..=l + 1).map(|j| g[j] * g[l + 2 - j]).sum();
    let lower: f64 = (0..=l).map(|j| g[j] * g[l - j]).sum();
    2.0 / 3.0 * two_thirds + (upper + lower) / 6.0
}

/// One step of the reflected first-order recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct GStep {
    pub values: Vec<f64>,
    /// `<G_l, G~_l>`
    pub h: f64,
    /// `||S(G_l)||`
    pub norm_s: f64,
}

/// First-order spline through `values` at the knots.
pub fn piecewise_linear(knots: Arc<KnotVector>, values: &[f64]) -> Result<Spline> {
    let m = values.len();
    let mut matrix = Vec::with_capacity(2 * m);
    for r in 0..m {
        let slope = if r + 1 < m {
            (values[r + 1] - values[r]) / knots.spacing(r)
        } else {
            0.0
        };
        matrix.extend_from_slice(&[values[r], slope]);
    }
    Spline::new(
        knots,
        1,
        Support {
            offset: 0,
            len: m - 2,
        },
        matrix,
        Convention::OneSided,
    )
}

/// Runs `G_{l+1} = (I_0(G_l) - sqrt(2)/2 <G_l, G~_l> S(G_l)) / sqrt(1 - <G_l, G~_l>^2)`
/// on spline objects, starting from `g_0 = (sqrt(3/2), 0)`.
pub fn g_iteration(levels: usize) -> Result<Vec<GStep>> {
    let mut g = vec![1.5f64.sqrt(), 0.0];
    let mut out = Vec::with_capacity(levels + 1);
    for _ in 0..=levels {
        let m = g.len() - 1;
        let grid = Arc::new(KnotVector::new((0..=m).map(|x| x as f64).collect())?);
        let rev: Vec<f64> = g.iter().rev().copied().collect();
        let h = piecewise_linear(grid.clone(), &g)?.inner_product(&piecewise_linear(grid, &rev)?)?;

        let wide = Arc::new(KnotVector::new(
            (0..=2 * m).map(|x| x as f64 - m as f64).collect(),
        )?);
        let s_vals: Vec<f64> = rev.iter().chain(&g[1..]).copied().collect();
        let mut i_vals = g.clone();
        i_vals.resize(2 * m + 1, 0.0);
        let s = piecewise_linear(wide.clone(), &s_vals)?;
        let i0 = piecewise_linear(wide.clone(), &i_vals)?;
        let norm_s = s.norm();
        out.push(GStep {
            values: g.clone(),
            h,
            norm_s,
        });

        let scale = 1.0 / (1.0 - h * h).sqrt();
        let next = Spline::linear_combination(
            &[scale, -scale * 0.5 * 2f64.sqrt() * h],
            &[&i0, &s],
        )?;
        g = wide
            .values()
            .iter()
            .map(|&t| next.evaluate(t))
            .collect::<Result<_>>()?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constants() {
        assert_abs_diff_eq!(ErrorModel::a(), 0.9751611, epsilon = 1e-7);
        let m = ErrorModel::new(4);
        assert_abs_diff_eq!(m.h(1), -ErrorModel::a() / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.error_bound(0), m.closed_bound(0), epsilon = 1e-12);
        assert!(ErrorModel::decay_factor(3) > 1.2e-5 && ErrorModel::decay_factor(3) < 1.3e-5);
    }

    #[test]
    fn reflection_sum_matches_spline() {
        let g = [0.3, -1.2, 0.7, 2.0, 0.1];
        let grid = Arc::new(KnotVector::new((0..5).map(|x| x as f64).collect()).unwrap());
        let rev: Vec<f64> = g.iter().rev().copied().collect();
        let a = piecewise_linear(grid.clone(), &g).unwrap();
        let b = piecewise_linear(grid, &rev).unwrap();
        assert_abs_diff_eq!(hat_inner_formula(&g), a.inner_product(&b).unwrap(), epsilon = 1e-13);
    }

    #[test]
    fn iteration_follows_recursion() {
        let model = ErrorModel::new(6);
        let steps = g_iteration(6).unwrap();
        for (l, step) in steps.iter().take(2).enumerate() {
            assert_abs_diff_eq!(step.h, model.h(l), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(steps[0].norm_s, 1.0, epsilon = 1e-14);
        // the sqrt(2)/2 weight does not keep S(G_l) normalized past l = 0
        assert!((steps[1].norm_s - 1.0).abs() > 1e-2);
    }

    #[test]
    fn consistent_recursion_decays_faster_than_quadratic() {
        let m = ErrorModel::consistent(5);
        assert_abs_diff_eq!(m.h(1), -1.0 / 14.0, epsilon = 1e-15);
        for l in 1..5 {
            assert!(m.h(l + 1).abs() < m.h(l).powi(2) * 1.2);
        }
    }

    #[test]
    fn stop_level_edges() {
        assert_eq!(ErrorModel::recommend_stop_level(9, 0.0), 8);
        assert_eq!(ErrorModel::recommend_stop_level(9, 1e9), 0);
        assert_eq!(ErrorModel::total_error_bound(5, 4, 1.0), 0.0);
    }
}
