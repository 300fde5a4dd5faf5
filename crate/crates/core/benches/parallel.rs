use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pseudospin::fock::{run_oracle_suite, OracleConfig};
use pseudospin::render::{render_state, GridSpec};
use pseudospin::scan::{run_scan, ScanAxis, ScanConfig, ScanRange};
use pseudospin::shell::seeded_state;
use pseudospin::{Execution, ShellSpec};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn mu_scan(c: &mut Criterion) {
    let mut cfg = ScanConfig::new(ScanAxis::Mu, ScanRange::new(0.1, 2.0, 32).unwrap());
    cfg.z_max = 20.0;
    let mut g = c.benchmark_group("mu_scan_32");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| run_scan(&cfg, e).unwrap())
        });
    }
    g.finish();
}

fn oracle_suite(c: &mut Criterion) {
    let cfg = OracleConfig {
        two_j_max: 16,
        ..OracleConfig::default()
    };
    let mut g = c.benchmark_group("fock_oracle_two_j_16");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| run_oracle_suite(&cfg, e).unwrap())
        });
    }
    g.finish();
}

fn render(c: &mut Criterion) {
    let spec = ShellSpec::new(20, 0.0).unwrap();
    let state = seeded_state(&spec, 0.7).unwrap();
    let grid = GridSpec::covering(20, 1.0, 256);
    let mut g = c.benchmark_group("render_256");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| render_state(&state, &spec, &grid, 1.0, 0.0, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, mu_scan, oracle_suite, render);
criterion_main!(benches);
