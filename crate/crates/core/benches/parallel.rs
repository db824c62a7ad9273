//! Sequential against parallel execution on the two sweep-shaped workloads:
//! model-selection replications and the closed-form verification grid.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ctinfo::sim::{run_kl_selection, SimulationConfig};
use ctinfo::verify::{verify_closed_forms, VerifyOptions};
use ctinfo::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn kl_selection(c: &mut Criterion) {
    let mut group = c.benchmark_group("kl_selection_500x500");
    group.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = SimulationConfig::kl_selection([0.9, 0.05, 0.05], vec![500], 500, 42);
        cfg.execution = exec;
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| black_box(run_kl_selection(cfg).unwrap()))
        });
    }
    group.finish();
}

fn verify_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_grid_7");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = VerifyOptions {
            grid: 7,
            execution: exec,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| black_box(verify_closed_forms(opts).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, kl_selection, verify_grid);
criterion_main!(benches);
