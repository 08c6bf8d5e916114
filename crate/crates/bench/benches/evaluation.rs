use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use doors_bench::{config, star};
use doors_core::simulator::{estimate_expected_time, SimOptions};
use doors_core::{a_simp, expected_time_cascading, expected_time_independent, Dependency, EvalOptions};

fn exact(c: &mut Criterion) {
    let seq = a_simp(4).unwrap();
    let ind = config(4, Dependency::Independent);
    c.bench_function("independent_round_robin_d4", |b| {
        b.iter(|| expected_time_independent(black_box(&ind), &seq, &EvalOptions::independent()))
    });
    let chain = config(4, Dependency::Cascading);
    c.bench_function("chain_round_robin_d4", |b| {
        b.iter(|| expected_time_cascading(black_box(&chain), &seq, &EvalOptions::cascading()))
    });
    let dag = config(4, star(4));
    let mut group = c.benchmark_group("dag");
    group.sample_size(10);
    group.bench_function("star_round_robin_d4", |b| {
        b.iter(|| expected_time_cascading(black_box(&dag), &seq, &EvalOptions::cascading()))
    });
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let chain = config(3, Dependency::Cascading);
    let seq = a_simp(3).unwrap();
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    group.bench_function("chain_d3_100k", |b| {
        b.iter(|| estimate_expected_time(black_box(&chain), &seq, 100_000, 1, &SimOptions::new()))
    });
    group.finish();
}

criterion_group!(benches, exact, monte_carlo);
criterion_main!(benches);
