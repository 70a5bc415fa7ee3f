use crate::bspline::BSplineBasis;
use crate::spline::Spline;
use crate::transform::{BasisTransform, Method};

/// Either a raw basis or a transform of one, for support measurement.
#[derive(Debug, Clone, Copy)]
pub enum BasisSupport<'a> {
    Raw(&'a BSplineBasis),
    Transformed(&'a BasisTransform, &'a BSplineBasis),
    Splines(&'a [Spline]),
}

/// Supports of the elements relative to the knot range.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportReport {
    pub method: Option<Method>,
    pub per_element: Vec<f64>,
    pub total: f64,
}

/// Length of a union of closed intervals.
fn union_length(mut pieces: Vec<(f64, f64)>) -> f64 {
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in pieces {
        match cur {
            Some((c0, c1)) if a <= c1 => cur = Some((c0, c1.max(b))),
            Some((c0, c1)) => {
                total += c1 - c0;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    total + cur.map_or(0.0, |(a, b)| b - a)
}

/// Relative support measured from the elements themselves: the support of a
/// transformed element is the union of the supports of the B-splines with
/// non-zero coefficients.
pub fn relative_support(target: BasisSupport<'_>) -> SupportReport {
    let (lengths, range, method): (Vec<f64>, f64, Option<Method>) = match target {
        BasisSupport::Raw(basis) => (
            basis
                .splines()
                .iter()
                .map(|s| union_length(s.support_interval().into_iter().collect()))
                .collect(),
            basis.knots().range(),
            None,
        ),
        BasisSupport::Transformed(p, basis) => (
            (0..p.dim())
                .map(|c| {
                    union_length(
                        p.sparse_column(c)
                            .iter()
                            .filter_map(|(r, _)| basis.get(*r).support_interval())
                            .collect(),
                    )
                })
                .collect(),
            basis.knots().range(),
            Some(p.method),
        ),
        BasisSupport::Splines(s) => (
            s.iter()
                .map(|s| union_length(s.support_interval().into_iter().collect()))
                .collect(),
            s.first().map_or(1.0, |s| s.knots().range()),
            None,
        ),
    };
    let per_element: Vec<f64> = lengths.iter().map(|l| l / range).collect();
    SupportReport {
        method,
        total: per_element.iter().sum(),
        per_element,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_merges_overlaps() {
        assert_eq!(union_length(vec![(0.0, 1.0), (0.5, 2.0), (3.0, 4.0)]), 3.0);
        assert_eq!(union_length(vec![]), 0.0);
    }
}
