use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use pattern_locate::bounds::{BiasModel, CrlbReport};
use pattern_locate::estimators::{estimate, EstimatorConfig};
use pattern_locate::montecarlo::{run_sweep, SweepConfig};
use pattern_locate::{Method, SweepAxis};
use pattern_locate_bench::{fixture, scenario};

fn estimators(c: &mut Criterion) {
    let cfg = EstimatorConfig::default();
    let mut group = c.benchmark_group("estimate");
    for n in [4usize, 8, 14] {
        let (m, k) = fixture(1.0, n, 7);
        for method in [Method::EqSolve, Method::Cid, Method::Mle, Method::Similarity] {
            group.bench_with_input(BenchmarkId::new(method.as_str(), n), &n, |b, _| {
                b.iter(|| estimate(method, black_box(&m), &k, Some(1.0), &cfg))
            });
        }
    }
    group.finish();
}

fn bounds(c: &mut Criterion) {
    let s = scenario(2.0, 8);
    c.bench_function("crlb_report", |b| {
        b.iter(|| CrlbReport::compute(black_box(&s), 2.0, s.true_theta, &BiasModel::Analytic))
    });
}

fn sweep(c: &mut Criterion) {
    let mut config = SweepConfig::new(scenario(2.0, 8), SweepAxis::Snr, vec![10.0]);
    config.trials = 20;
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("snr_point_20_trials", |b| b.iter(|| run_sweep(black_box(&config))));
    group.finish();
}

criterion_group!(benches, estimators, bounds, sweep);
criterion_main!(benches);
