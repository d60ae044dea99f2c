use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lens_interference::harness::run_scenario_with;
use lens_interference::interference::sweep_pattern_with;
use lens_interference::{LensArrayConfig, Parallelism, ScenarioConfig, SectorModel};

const MODES: [(&str, Parallelism); 2] =
    [("serial", Parallelism::Serial), ("auto", Parallelism::Auto)];

fn monte_carlo(c: &mut Criterion) {
    let sector = SectorModel::default();
    let mut group = c.benchmark_group("effective_prob_mc");
    group.sample_size(20);
    for (name, par) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 1_000_000), &par, |b, &par| {
            b.iter(|| {
                sector
                    .effective_prob_mc(black_box(10.0), 1_000_000, 1, par)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn pattern(c: &mut Criterion) {
    let config = LensArrayConfig::new(40.0, 1.0).unwrap();
    let grid: Vec<f64> = (0..20_001).map(|i| -0.5 + i as f64 / 20_000.0).collect();
    let mut group = c.benchmark_group("sweep_pattern");
    for (name, par) in MODES {
        group.bench_with_input(BenchmarkId::new(name, grid.len()), &par, |b, &par| {
            b.iter(|| sweep_pattern_with(&config, black_box(0.1), &grid, par).unwrap())
        });
    }
    group.finish();
}

fn scenario(c: &mut Criterion) {
    let config =
        ScenarioConfig::new(LensArrayConfig::new(20.0, 1.0).unwrap(), 10, 5_000, 3).unwrap();
    let mut group = c.benchmark_group("run_scenario");
    group.sample_size(10);
    for (name, par) in MODES {
        group.bench_with_input(
            BenchmarkId::new(name, config.trial_count),
            &par,
            |b, &par| b.iter(|| run_scenario_with(black_box(&config), par).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, pattern, scenario);
criterion_main!(benches);
