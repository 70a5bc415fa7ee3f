use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use splinet::analysis::{
    hat_inner_formula, piecewise_linear, quadrature_inner_product, relative_support, BasisSupport,
};
use splinet::bspline::evaluate_recurrence;
use splinet::ortho::{
    one_sided_osplines, sym_gram_schmidt_coords, sym_pair, two_sided_osplines, IndexReversal,
    SymmetryAction,
};
use splinet::smoothness::validate_smoothness;
use splinet::splinet::{band_diagonalize, dyadic_iterations, dyadic_orthogonalize, submerge};
use splinet::{build_basis, BSplineBasis, Direction, KnotVector, Spline};

fn basis(count: usize, k: usize, seed: u64) -> BSplineBasis {
    build_basis(Arc::new(KnotVector::random(count, 1e-3, seed).unwrap()), k).unwrap()
}

fn equispaced(n: usize, k: usize) -> BSplineBasis {
    build_basis(Arc::new(KnotVector::equispaced(n + 2, 0.0, 1.0).unwrap()), k).unwrap()
}

fn combination(b: &BSplineBasis, lo: usize, coeffs: &[f64]) -> Spline {
    let lo = lo % b.len();
    let hi = (lo + coeffs.len()).min(b.len());
    let parts: Vec<&Spline> = (lo..hi).map(|i| b.get(i)).collect();
    Spline::linear_combination(&coeffs[..hi - lo], &parts).unwrap()
}

/// Points strictly inside the knot intervals.
fn interior_points(b: &BSplineBasis) -> Vec<f64> {
    let xi = b.knots().values();
    xi.windows(2)
        .flat_map(|w| [0.3, 0.71].map(|u| w[0] + u * (w[1] - w[0])))
        .collect()
}

fn spline_case() -> impl Strategy<Value = (usize, usize, u64, usize, Vec<f64>)> {
    (1..=4usize, 0..24usize, any::<u64>(), 0..30usize, prop::collection::vec(-2.0..2.0f64, 1..8))
        .prop_map(|(k, extra, seed, lo, c)| (k, k + 3 + extra, seed, lo, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn inner_product_matches_quadrature(
        (k, count, seed, lo, c) in spline_case(), lo2 in 0..30usize, c2 in prop::collection::vec(-2.0..2.0f64, 1..8)
    ) {
        let b = basis(count, k, seed);
        let (x, y) = (combination(&b, lo, &c), combination(&b, lo2, &c2));
        let exact = x.inner_product(&y).unwrap();
        prop_assert!((exact - quadrature_inner_product(&x, &y).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn evaluation_is_linear((k, count, seed, lo, c) in spline_case()) {
        let b = basis(count, k, seed);
        let lo = lo % b.len();
        let hi = (lo + c.len()).min(b.len());
        let s = combination(&b, lo, &c);
        for t in interior_points(&b) {
            let direct: f64 = (lo..hi).map(|i| c[i - lo] * b.get(i).evaluate(t).unwrap()).sum();
            prop_assert!((s.evaluate(t).unwrap() - direct).abs() <= 1e-12 * (1.0 + direct.abs()) * 10.0);
        }
    }

    #[test]
    fn derivative_matches_difference_quotient((k, count, seed, lo, c) in spline_case()) {
        let b = basis(count, k, seed);
        let s = combination(&b, lo, &c);
        let ds = s.derivative().unwrap();
        let xi = b.knots().values();
        let h = 1e-6;
        for w in xi.windows(2).filter(|w| w[1] - w[0] > 1e-2) {
            let t = 0.5 * (w[0] + w[1]);
            let fd = (s.evaluate(t + h).unwrap() - s.evaluate(t - h).unwrap()) / (2.0 * h);
            let exact = ds.evaluate(t).unwrap();
            prop_assert!((fd - exact).abs() <= 1e-3 * (1.0 + exact.abs()), "{fd} vs {exact}");
        }
    }

    #[test]
    fn conventions_round_trip((k, count, seed, lo, c) in spline_case()) {
        let b = basis(count, k, seed);
        let s = combination(&b, lo, &c);
        prop_assert_eq!(&s.to_symmetric().to_one_sided(), &s);
        let sym = s.to_symmetric();
        for t in interior_points(&b) {
            prop_assert_eq!(sym.evaluate(t).unwrap(), s.evaluate(t).unwrap());
        }
    }

    #[test]
    fn combinations_stay_smooth((k, count, seed, lo, c) in spline_case()) {
        let b = basis(count, k, seed);
        let report = validate_smoothness(&combination(&b, lo, &c));
        prop_assert!(report.passed(), "{:?}", report.max_residual);
    }

    #[test]
    fn basis_matches_pointwise_recurrence(k in 1..=4usize, extra in 0..20usize, seed in any::<u64>()) {
        let b = basis(k + 3 + extra, k, seed);
        let xi = b.knots().values();
        for t in interior_points(&b) {
            let reference = evaluate_recurrence(xi, k, t);
            for (i, r) in reference.iter().enumerate().take(b.len()) {
                prop_assert!((b.get(i).evaluate(t).unwrap() - r).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn reflection_formula_matches_quadrature(g in prop::collection::vec(-2.0..2.0f64, 2..12)) {
        let grid = Arc::new(KnotVector::new((0..g.len()).map(|x| x as f64).collect()).unwrap());
        let rev: Vec<f64> = g.iter().rev().copied().collect();
        let a = piecewise_linear(grid.clone(), &g).unwrap();
        let b = piecewise_linear(grid, &rev).unwrap();
        let q = quadrature_inner_product(&a, &b).unwrap();
        prop_assert!((hat_inner_formula(&g) - q).abs() <= 1e-12 * (1.0 + q.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn outputs_are_orthonormal_and_span_the_basis(k in 1..=4usize, extra in 0..40usize, seed in any::<u64>()) {
        let b = basis(k + 3 + extra, k, seed);
        let gram = b.gram().unwrap();
        let h = gram.to_dense();
        let mut outputs = vec![
            one_sided_osplines(&b, Direction::LeftToRight).unwrap(),
            one_sided_osplines(&b, Direction::RightToLeft).unwrap(),
            two_sided_osplines(&b).unwrap(),
            splinet::splinet::splinet_of_basis(&b).unwrap().transform,
        ];
        if let Ok(s) = dyadic_orthogonalize(&b) {
            outputs.push(s.transform);
        }
        for p in outputs {
            prop_assert!(p.orthonormality_residual(&gram) <= 1e-10, "{}", p.method.tag());
            // P P^T H = I means every B-spline is its own projection
            let recon = &p.coeffs * p.coeffs.transpose() * &h;
            let err = &recon - DMatrix::identity(b.len(), b.len());
            let worst = (0..b.len())
                .map(|i| {
                    let e = err.column(i);
                    e.dot(&(&h * e)).max(0.0).sqrt()
                })
                .fold(0.0, f64::max);
            prop_assert!(worst <= 1e-10, "{} span error {worst}", p.method.tag());
        }
    }

    #[test]
    fn band_gram_diagonalizes(k in 1..=4usize, levels in 1..=5usize, seed in any::<u64>()) {
        let n = k * (1 << levels) - 1;
        if n + 2 < 513 {
            let b = basis(n + 2, k, seed);
            let gram = b.gram().unwrap();
            let p = band_diagonalize(&gram, k).unwrap();
            prop_assert!(p.orthonormality_residual(&gram) <= 1e-10);
        }
    }

    #[test]
    fn gram_is_banded(k in 1..=4usize, extra in 0..20usize, seed in any::<u64>()) {
        let b = basis(k + 3 + extra, k, seed);
        for i in 0..b.len() {
            let (lo, hi) = b.get(i).support_interval().unwrap();
            let xi = b.knots().values();
            prop_assert_eq!((lo, hi), (xi[i], xi[i + k + 1]));
            for j in i + k + 1..b.len() {
                prop_assert_eq!(b.get(i).inner_product(b.get(j)).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn pair_symmetrization_commutes_with_reversal(x in prop::collection::vec(-1.0..1.0f64, 6)) {
        // Gram of equispaced B-splines is invariant under index reversal
        let h = equispaced(8, 3).gram().unwrap().to_dense();
        let x = DVector::from_vec(x);
        let y = IndexReversal.apply(&x);
        let (nx, ny) = ((x.dot(&(&h * &x))).sqrt(), (y.dot(&(&h * &y))).sqrt());
        let (x, y) = (x / nx, y / ny);
        let c = x.dot(&(&h * &y));
        prop_assume!(c.abs() < 0.99);
        let (u, v) = sym_pair(&x, &y, c).unwrap();
        prop_assert!((IndexReversal.apply(&u) - &v).amax() <= 1e-12);
        prop_assert!((u.dot(&(&h * &v))).abs() <= 1e-12);
    }

    #[test]
    fn symmetric_gs_keeps_nested_outer_spans(d in 2..=10usize, seed in any::<u64>()) {
        let b = basis(d + 3, 2, seed);
        let h = b.gram().unwrap().to_dense().view((0, 0), (d, d)).clone_owned();
        let t = sym_gram_schmidt_coords(&h).unwrap();
        for i in 0..d / 2 {
            for c in [i, d - 1 - i] {
                for r in i + 1..d - 1 - i {
                    prop_assert_eq!(t[(r, c)], 0.0);
                }
            }
        }
    }
}

#[test]
fn basis_dimension() {
    for k in 1..=4 {
        for n in [k, k + 1, 37, 200] {
            assert_eq!(equispaced(n, k).len(), n + 1 - k);
        }
    }
}

#[test]
fn disjoint_supports_skip_all_work() {
    let b = equispaced(20, 2);
    let (v, visited) = b.get(0).inner_product_counted(b.get(10)).unwrap();
    assert_eq!((v, visited), (0.0, 0));
}

#[test]
fn symmetric_methods_mirror_on_equispaced_knots() {
    for k in 1..=3 {
        let n = k * 8 - 1;
        let b = equispaced(n, k);
        let d = b.len();
        let two = two_sided_osplines(&b).unwrap().splines(&b).unwrap();
        let net = dyadic_orthogonalize(&b).unwrap().splines;
        for set in [&two, &net] {
            for i in 0..d {
                for t in interior_points(&b) {
                    let a = set[i].evaluate(t).unwrap();
                    let m = set[d - 1 - i].evaluate(1.0 - t).unwrap();
                    assert!((a - m).abs() <= 1e-10, "k={k} i={i} t={t}: {a} vs {m}");
                }
            }
        }
    }
}

#[test]
fn first_step_touches_only_flanking_tuplets() {
    for k in 1..=3 {
        let b = equispaced(k * 16 - 1, k);
        let s = dyadic_iterations(&b, 1).unwrap();
        for (c, label) in s.labels.iter().enumerate() {
            if label.level == 0 {
                continue;
            }
            let t = c / k;
            for r in 0..b.len() {
                if r / k + 1 < t || r / k > t + 1 {
                    assert_eq!(s.transform.coeffs[(r, c)], 0.0);
                }
            }
        }
    }
}

#[test]
fn padding_never_mixes_with_the_real_block() {
    let b = equispaced(100, 3);
    let sub = submerge(&b.gram().unwrap(), 3).unwrap();
    let p = band_diagonalize(&sub.matrix, 3).unwrap().coeffs;
    let m = b.len();
    let real = sub.pad_top..sub.pad_top + m;
    for i in 0..p.nrows() {
        for j in real.clone() {
            if !real.contains(&i) {
                assert_eq!(p[(i, j)], 0.0);
                assert_eq!(p[(j, i)], 0.0);
            }
        }
    }
}

#[test]
fn support_ordering_for_larger_first_order_nets() {
    for n in [31, 63] {
        let b = equispaced(n, 1);
        let raw = relative_support(BasisSupport::Raw(&b)).total;
        let net = dyadic_orthogonalize(&b).unwrap();
        let net = relative_support(BasisSupport::Transformed(&net.transform, &b)).total;
        let two = two_sided_osplines(&b).unwrap();
        let two = relative_support(BasisSupport::Transformed(&two, &b)).total;
        let one = one_sided_osplines(&b, Direction::LeftToRight).unwrap();
        let one = relative_support(BasisSupport::Transformed(&one, &b)).total;
        assert!(raw < net && net < two && two < one, "{raw} {net} {two} {one}");
    }
}
