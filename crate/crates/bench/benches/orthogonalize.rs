use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use splinet::ortho::{one_sided_osplines, two_sided_osplines};
use splinet::splinet::{band_diagonalize, dyadic_orthogonalize, splinet_of_basis};
use splinet::{build_basis, BandMatrix, Direction, KnotVector};

fn bench_methods(c: &mut Criterion) {
    let mut group = c.benchmark_group("orthogonalize");
    for &(k, levels) in &[(1usize, 6usize), (3, 5)] {
        let count = k * (1 << levels) + k + 1;
        let knots = Arc::new(KnotVector::equispaced(count, 0.0, 1.0).unwrap());
        let basis = build_basis(knots, k).unwrap();
        let id = format!("k{k}_d{}", basis.len());
        group.bench_with_input(BenchmarkId::new("gs-lr", &id), &basis, |b, basis| {
            b.iter(|| one_sided_osplines(black_box(basis), Direction::LeftToRight).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("twosided", &id), &basis, |b, basis| {
            b.iter(|| two_sided_osplines(black_box(basis)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("splinet-band", &id), &basis, |b, basis| {
            b.iter(|| splinet_of_basis(black_box(basis)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("splinet-splines", &id), &basis, |b, basis| {
            b.iter(|| dyadic_orthogonalize(black_box(basis)).unwrap())
        });
    }
    group.finish();
}

fn bench_band(c: &mut Criterion) {
    // third-order equispaced Gram pattern, 511 tuplets
    let h = BandMatrix::toeplitz(1533, &[2416.0 / 5040.0, 1191.0 / 5040.0, 120.0 / 5040.0, 1.0 / 5040.0]);
    c.bench_function("band_diagonalize_1533", |b| {
        b.iter(|| band_diagonalize(black_box(&h), 3).unwrap())
    });
}

criterion_group!(benches, bench_methods, bench_band);
criterion_main!(benches);
