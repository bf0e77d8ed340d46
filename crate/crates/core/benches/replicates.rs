use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use deviatile::data_io::synthetic_fixture;
use deviatile::estimators::{block_bootstrap_ci, BootstrapConfig, EstimatorSpec};
use deviatile::par::Execution;
use deviatile::risk_core::Measure;
use deviatile::simulation::{run_experiment_with, ExperimentConfig, ModelSpec, TrueValueMode};

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    if cfg!(feature = "parallel") {
        m.push(("parallel", Execution::Parallel));
    }
    m
}

fn experiment(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        model: ModelSpec::StudentT { alpha: 5.0 },
        n: 10_000,
        k: 100,
        tau: 0.99,
        p: Some(0.9996),
        reps: 64,
        base_seed: 1,
        true_value_mode: TrueValueMode::AnalyticQuadrature,
        keep_ratios: false,
    };
    let mut g = c.benchmark_group("experiment_t5_n1e4_64reps");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_experiment_with(black_box(&cfg), exec).unwrap())
        });
    }
    g.finish();
}

fn bootstrap(c: &mut Criterion) {
    let series = synthetic_fixture().unwrap();
    let spec = EstimatorSpec {
        measure: Measure::Deviatile,
        tau: 0.95,
        p: Some(0.999),
        k: 100,
    };
    let cfg = BootstrapConfig {
        mean_block: 200.0,
        reps: 100,
        coverage: 0.95,
        seed: 3,
    };
    let mut g = c.benchmark_group("bootstrap_fixture_100reps");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| block_bootstrap_ci(black_box(&series.values), &spec, &cfg, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, experiment, bootstrap);
criterion_main!(benches);
