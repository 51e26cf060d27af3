use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kuhnnet::baseline::build_sota;
use kuhnnet::builder::{build_approximator, encode};
use kuhnnet::gadgets::{build_memorizer_deep, build_memorizer_sqrt, Samples1D};
use kuhnnet::targets::Target;

fn approximator(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_approximator");
    for (d, n) in [(1, 64), (2, 8), (3, 4)] {
        let grid = encode(|x| Target::Ridge(0.37).eval(x), d, n).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(format!("d{d}_n{n}")), &grid, |b, grid| {
            b.iter(|| build_approximator(black_box(grid)).unwrap())
        });
    }
    g.finish();
}

fn memorizers(c: &mut Criterion) {
    let smp = |k: usize| {
        Samples1D::new((0..k).map(|i| (i as f64 / k as f64, (9.0 * i as f64 / k as f64).sin())).collect()).unwrap()
    };
    let s100 = smp(100);
    c.bench_function("memorize_sqrt_100", |b| b.iter(|| build_memorizer_sqrt(black_box(&s100)).unwrap()));
    let s50 = smp(50);
    c.bench_function("memorize_deep_50", |b| b.iter(|| build_memorizer_deep(black_box(&s50), &[20, 20, 20]).unwrap()));
}

fn baseline(c: &mut Criterion) {
    c.bench_function("build_sota_d2_n4", |b| {
        b.iter(|| build_sota(|x| Target::MinCoords.eval(x), 1.0, 1.0, 2, black_box(4)).unwrap())
    });
}

criterion_group!(benches, approximator, memorizers, baseline);
criterion_main!(benches);
