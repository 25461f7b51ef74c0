use criterion::{criterion_group, criterion_main, Criterion};

use mmcheck_core::bg::{estimate_min_c, SamplingPlan};
use mmcheck_core::dimension::{covering_number, gh_distance_small};
use mmcheck_core::zoo::{generate, ZooSpec};

fn zoo(text: &str) -> mmcheck_core::DiscreteSpace {
    generate(&ZooSpec::parse(text).unwrap()).unwrap()
}

fn bench_distance_row(c: &mut Criterion) {
    let s = zoo("grid?h=0.01");
    c.bench_function("distance_row_grid_10k", |b| {
        b.iter(|| std::hint::black_box(s.distance_to_set(&[0])))
    });
}

fn bench_min_c(c: &mut Criterion) {
    let s = zoo("interval?h=0.005");
    let plan = SamplingPlan::standard(&s, 0);
    c.bench_function("min_c_interval_200", |b| {
        b.iter(|| std::hint::black_box(estimate_min_c(&s, 0.0, 1.0, &plan).unwrap()))
    });
}

fn bench_covering(c: &mut Criterion) {
    let s = zoo("grid?h=0.02");
    c.bench_function("covering_grid_2500", |b| {
        b.iter(|| std::hint::black_box(covering_number(&s, 0.1)))
    });
}

fn bench_gh(c: &mut Criterion) {
    let x = zoo("interval?h=0.25");
    let y = zoo("star?d=3&h=0.5&l=1");
    c.bench_function("gh_small_5x7", |b| {
        b.iter(|| std::hint::black_box(gh_distance_small(&x, &y, 100_000_000).unwrap()))
    });
}

criterion_group!(benches, bench_distance_row, bench_min_c, bench_covering, bench_gh);
criterion_main!(benches);
