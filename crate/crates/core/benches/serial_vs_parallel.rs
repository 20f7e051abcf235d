use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kout_core::samplers::{DegreeRoute, ZMethod};
use kout_core::stats::{degree_sequence_histogram, estimate_tv_via_f, sum_squares_histogram, z_pair_histogram};
use kout_core::{Execution, ModelParams, RngSeed};

fn modes() -> [(&'static str, Execution); 2] {
    [("serial", Execution::Serial), ("parallel", Execution::Parallel { threads: 0 })]
}

fn sum_squares(c: &mut Criterion) {
    let mut group = c.benchmark_group("sum_squares_histogram");
    group.sample_size(10);
    for n in [1_000usize, 10_000] {
        let p = ModelParams::critical(n, 1, 1.0).unwrap();
        for (name, exec) in modes() {
            group.bench_with_input(BenchmarkId::new(name, n), &p, |b, p| {
                b.iter(|| black_box(sum_squares_histogram(p, 20_000, RngSeed::new(1), exec).unwrap()))
            });
        }
    }
    group.finish();
}

fn via_f(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_tv_via_f");
    group.sample_size(10);
    let p = ModelParams::critical(5_000, 1, 1.0).unwrap();
    for (name, exec) in modes() {
        group.bench_function(name, |b| b.iter(|| black_box(estimate_tv_via_f(&p, 20_000, RngSeed::new(2), exec).unwrap())));
    }
    group.finish();
}

fn degree_routes(c: &mut Criterion) {
    let mut group = c.benchmark_group("degree_sequence_histogram");
    group.sample_size(10);
    let p = ModelParams::finite(20, 2, 3.0).unwrap();
    for route in [DegreeRoute::FixedOrder, DegreeRoute::RandomOrder, DegreeRoute::Direct] {
        for (name, exec) in modes() {
            group.bench_function(BenchmarkId::new(name, format!("{route:?}")), |b| {
                b.iter(|| black_box(degree_sequence_histogram(&p, route, 50_000, RngSeed::new(3), exec).unwrap()))
            });
        }
    }
    group.finish();
}

fn z_pairs(c: &mut Criterion) {
    let mut group = c.benchmark_group("z_pair_histogram");
    group.sample_size(10);
    let p = ModelParams::critical(2_500, 1, 1.0).unwrap();
    for method in [ZMethod::GammaPoisson, ZMethod::Inversion] {
        for (name, exec) in modes() {
            group.bench_function(BenchmarkId::new(name, format!("{method:?}")), |b| {
                b.iter(|| black_box(z_pair_histogram(&p, 2_000, method, RngSeed::new(4), exec)))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sum_squares, via_f, degree_routes, z_pairs);
criterion_main!(benches);
