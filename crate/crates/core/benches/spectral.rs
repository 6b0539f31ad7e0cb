use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fpme_core::diagnostics::{run_property_suite, FieldGenerator, PropertySuiteConfig};
use fpme_core::linear::{solve_linear, LinearProblem, TimeStepPolicy};
use fpme_core::{forward_transform, inverse_transform, par, Grid};

fn paths() -> [(&'static str, bool); 2] {
    [("parallel", false), ("sequential", true)]
}

fn run<R>(sequential: bool, f: impl FnOnce() -> R) -> R {
    if sequential {
        par::force_sequential(f)
    } else {
        f()
    }
}

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_round_trip");
    for (dim, n) in [(2, 256), (3, 64)] {
        let g = Grid::new(dim, n, 2.0 * PI).unwrap();
        let f = FieldGenerator::random_trig(1, 1.0, g.cutoff()).generate(g).unwrap();
        for (name, seq) in paths() {
            group.bench_with_input(BenchmarkId::new(name, format!("d{dim}_n{n}")), &f, |b, f| {
                b.iter(|| run(seq, || inverse_transform(&forward_transform(black_box(f))).unwrap()))
            });
        }
    }
    group.finish();
}

fn linear_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("linear_solve");
    group.sample_size(10);
    let g = Grid::new(2, 128, 2.0 * PI).unwrap();
    let u0 = FieldGenerator::gaussian_bump(1.0, 0.5).generate(g).unwrap();
    let v = FieldGenerator::gaussian_bump(0.8, 0.6).generate(g).unwrap();
    let p = LinearProblem::new(0.75, v, u0, 0.2, 0.02).unwrap();
    let policy = TimeStepPolicy::default();
    for (name, seq) in paths() {
        group.bench_function(BenchmarkId::new(name, "d2_n128"), |b| {
            b.iter(|| run(seq, || solve_linear(black_box(&p), &policy, 1000).unwrap().steps))
        });
    }
    group.finish();
}

fn property_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("property_suite");
    group.sample_size(10);
    let cfg = PropertySuiteConfig { dim: 2, n: 32, fields: 16, pairs: 16, ..PropertySuiteConfig::default() };
    for (name, seq) in paths() {
        group.bench_function(BenchmarkId::new(name, "d2_n32"), |b| {
            b.iter(|| run(seq, || run_property_suite(black_box(&cfg)).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, transforms, linear_solve, property_suite);
criterion_main!(benches);
