use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lowrank_bench::{dense_gaussian, direction_inputs};
use lowrank_gn::direction::gn_direction;
use lowrank_gn::linalg::truncated_svd;

fn direction(c: &mut Criterion) {
    let mut group = c.benchmark_group("gn_direction");
    for &(m, n, r) in &[(64, 64, 4), (200, 400, 5), (500, 500, 10)] {
        let (x, z) = direction_inputs(m, n, r);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{m}x{n}r{r}")), &(x, z), |b, (x, z)| {
            b.iter(|| gn_direction(black_box(x), black_box(z)).unwrap())
        });
    }
    group.finish();
}

fn svd(c: &mut Criterion) {
    let mut group = c.benchmark_group("truncated_svd");
    for &(m, n, r) in &[(64, 64, 6), (200, 400, 5)] {
        let b = dense_gaussian(m, n);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{m}x{n}r{r}")), &b, |bench, b| {
            bench.iter(|| truncated_svd(black_box(b), r).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, direction, svd);
criterion_main!(benches);
