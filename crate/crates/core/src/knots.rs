use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SplineError};

/// How the ends of the knot range are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Strictly increasing knots; splines vanish with all derivatives of
    /// order below the spline order at both ends.
    ZeroBoundary,
    /// The first and last knots are repeated `extra` additional times.
    Superfluous { extra: usize },
}

/// Ordered knots `xi_0 <= ... <= xi_{n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotVector {
    values: Vec<f64>,
    mode: BoundaryMode,
}

impl KnotVector {
    /// Strictly increasing knots in zero-boundary mode.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(SplineError::InvalidKnots {
                index: values.len(),
                reason: "at least two knots are required".into(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(SplineError::InvalidKnots {
                    index: i,
                    reason: "knot is not finite".into(),
                });
            }
        }
        for i in 1..values.len() {
            if values[i] <= values[i - 1] {
                return Err(SplineError::InvalidKnots {
                    index: i,
                    reason: format!("{} does not exceed {}", values[i], values[i - 1]),
                });
            }
        }
        Ok(Self {
            values,
            mode: BoundaryMode::ZeroBoundary,
        })
    }

    /// `count` equally spaced knots over `[a, b]`.
    pub fn equispaced(count: usize, a: f64, b: f64) -> Result<Self> {
        if count < 2 || !(b > a) {
            return Err(SplineError::InvalidKnots {
                index: 0,
                reason: format!("cannot place {count} knots on [{a}, {b}]"),
            });
        }
        let step = (b - a) / (count - 1) as f64;
        let mut values: Vec<f64> = (0..count).map(|i| a + step * i as f64).collect();
        values[count - 1] = b;
        Self::new(values)
    }

    /// `count` knots on `[0, 1]` with both endpoints fixed, interior knots
    /// drawn uniformly and consecutive gaps at least `min_gap`.
    pub fn random(count: usize, min_gap: f64, seed: u64) -> Result<Self> {
        if count < 2 {
            return Self::equispaced(count, 0.0, 1.0);
        }
        let gaps = (count - 1) as f64;
        let free = 1.0 - gaps * min_gap;
        if free <= 0.0 {
            return Err(SplineError::InvalidKnots {
                index: count,
                reason: format!("{count} knots cannot keep gaps of {min_gap} on [0, 1]"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draws: Vec<f64> = (0..count - 2).map(|_| rng.gen::<f64>() * free).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut values = Vec::with_capacity(count);
        values.push(0.0);
        for (i, u) in draws.into_iter().enumerate() {
            values.push(u + min_gap * (i + 1) as f64);
        }
        values.push(1.0);
        Self::new(values)
    }

    /// Knots with the first and last value repeated `extra` more times.
    pub fn superfluous(base: &[f64], extra: usize) -> Result<Self> {
        let inner = Self::new(base.to_vec())?;
        let first = inner.values[0];
        let last = *inner.values.last().unwrap();
        let mut values = vec![first; extra];
        values.extend_from_slice(&inner.values);
        values.extend(std::iter::repeat_n(last, extra));
        Ok(Self {
            values,
            mode: BoundaryMode::Superfluous { extra },
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of internal knots `n`.
    pub fn internal_count(&self) -> usize {
        self.values.len() - 2
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Length of the interval `(xi_r, xi_{r+1}]`.
    pub fn spacing(&self, r: usize) -> f64 {
        self.values[r + 1] - self.values[r]
    }

    pub fn range(&self) -> f64 {
        self.last() - self.first()
    }

    /// Index `r` of the positive-length interval `(xi_r, xi_{r+1}]` holding
    /// `t`; the left end of the range maps to the first such interval.
    pub fn interval_of(&self, t: f64) -> Result<usize> {
        let (lo, hi) = (self.first(), self.last());
        if !(t >= lo && t <= hi) {
            return Err(SplineError::Domain { t, lo, hi });
        }
        let v = &self.values;
        if t == lo {
            return Ok(v.iter().rposition(|&x| x == lo).unwrap());
        }
        // first index with v[idx] >= t, so v[idx-1] < t <= v[idx]
        let idx = v.partition_point(|&x| x < t);
        Ok(idx - 1)
    }

    /// Knots under the map `x -> a + scale * x`.
    pub fn affine(&self, a: f64, scale: f64) -> Result<Self> {
        let values: Vec<f64> = self.values.iter().map(|x| a + scale * x).collect();
        match self.mode {
            BoundaryMode::ZeroBoundary => Self::new(values),
            BoundaryMode::Superfluous { .. } => Ok(Self {
                values,
                mode: self.mode,
            }),
        }
    }

    /// True when the knots are mirror symmetric about the centre of the range.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let s = self.first() + self.last();
        let n = self.values.len();
        (0..n).all(|i| (self.values[i] + self.values[n - 1 - i] - s).abs() <= tol)
    }

    /// Internal knot closest to the centre of the range; ties go to the
    /// smaller index.
    pub fn central_knot(&self) -> usize {
        let mid = 0.5 * (self.first() + self.last());
        let mut best = 1.min(self.values.len() - 1);
        let mut dist = f64::INFINITY;
        for i in 1..self.values.len().saturating_sub(1) {
            let d = (self.values[i] - mid).abs();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_increasing() {
        let err = KnotVector::new(vec![0.0, 0.5, 0.5, 1.0]).unwrap_err();
        assert!(matches!(err, SplineError::InvalidKnots { index: 2, .. }));
    }

    #[test]
    fn interval_lookup_is_half_open() {
        let k = KnotVector::equispaced(5, 0.0, 1.0).unwrap();
        assert_eq!(k.interval_of(0.0).unwrap(), 0);
        assert_eq!(k.interval_of(0.25).unwrap(), 0);
        assert_eq!(k.interval_of(0.2500001).unwrap(), 1);
        assert_eq!(k.interval_of(1.0).unwrap(), 3);
        assert!(k.interval_of(1.5).is_err());
    }

    #[test]
    fn interval_lookup_skips_repeated_knots() {
        let k = KnotVector::superfluous(&[0.0, 0.5, 1.0], 2).unwrap();
        assert_eq!(k.values(), &[0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0]);
        assert_eq!(k.interval_of(0.0).unwrap(), 2);
        assert_eq!(k.interval_of(0.7).unwrap(), 3);
        assert_eq!(k.interval_of(1.0).unwrap(), 3);
    }

    #[test]
    fn random_knots_keep_minimum_gap() {
        let k = KnotVector::random(200, 1e-3, 7).unwrap();
        assert_eq!(k.first(), 0.0);
        assert_eq!(k.last(), 1.0);
        for r in 0..k.len() - 1 {
            assert!(k.spacing(r) >= 1e-3 - 1e-15);
        }
        assert_eq!(k, KnotVector::random(200, 1e-3, 7).unwrap());
    }

    #[test]
    fn central_knot_prefers_smaller_index_on_ties() {
        let k = KnotVector::equispaced(4, 0.0, 3.0).unwrap();
        assert_eq!(k.central_knot(), 1);
        let k = KnotVector::equispaced(17, 0.0, 1.0).unwrap();
        assert_eq!(k.central_knot(), 8);
    }
}
