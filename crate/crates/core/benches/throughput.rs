//! Sequential vs parallel execution of whole runs and memory sweeps, plus
//! the fusion kernel on its own.
//!
//! Run with: cargo bench -p wayfind-core

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wayfind::fusion::{fuse, SourceMatrix, DEFAULT_EPSILON};
use wayfind::info_sources::RouteDistribution;
use wayfind::simulation::presets::{REFERENCE_JUNCTION, TABLE1};
use wayfind::simulation::{load_scenario, run_with, sweep_memory};
use wayfind::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn geometric_run(c: &mut Criterion) {
    let scenario = load_scenario(REFERENCE_JUNCTION).unwrap();
    let mut group = c.benchmark_group("junction_run");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_with(black_box(&scenario), exec).unwrap())
        });
    }
    group.finish();
}

fn memory_sweep(c: &mut Criterion) {
    let scenario = load_scenario(REFERENCE_JUNCTION).unwrap().with_agents(20);
    let windows = [1, 3, 6];
    let mut group = c.benchmark_group("memory_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sweep_memory(black_box(&scenario), &windows, 4, exec).unwrap())
        });
    }
    group.finish();
}

fn synthetic_run(c: &mut Criterion) {
    let scenario = TABLE1[6].scenario(1).with_agents(1000);
    let mut group = c.benchmark_group("synthetic_run");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_with(black_box(&scenario), exec).unwrap())
        });
    }
    group.finish();
}

fn fusion(c: &mut Criterion) {
    let rows = vec![
        RouteDistribution::from_weights(&[3.0, 1.0, 1.0, 2.0]),
        RouteDistribution::from_weights(&[1.0, 1.0, 2.0, 2.0]),
        RouteDistribution::from_weights(&[0.5, 2.0, 1.0, 1.0]),
        RouteDistribution::from_weights(&[2.0, 1.0, 1.0, 1.0]),
    ];
    let matrix = SourceMatrix::new(rows).unwrap();
    c.bench_function("fuse_4x4", |b| b.iter(|| fuse(black_box(&matrix), DEFAULT_EPSILON).unwrap()));
}

criterion_group!(benches, geometric_run, memory_sweep, synthetic_run, fusion);
criterion_main!(benches);
