use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use noe_bench::{paired_samples, settled_world};
use noe_core::{glass_delta, independent_t_test, moving_average, SimConfig, SocietyKind};

fn step_world(c: &mut Criterion) {
    let mut group = c.benchmark_group("step_world");
    for society in SocietyKind::ALL {
        let mut world = settled_world(society, 300);
        group.bench_function(BenchmarkId::from_parameter(society), |b| {
            b.iter(|| world.step_world())
        });
    }
    group.finish();
}

fn desk_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("desk_run");
    group.sample_size(10);
    for society in [SocietyKind::Sanctioning, SocietyKind::Noe] {
        let config = SimConfig {
            society,
            n_agents: 100,
            queue_size: 20,
            n_steps: 1000,
            ..SimConfig::default()
        };
        group.bench_function(BenchmarkId::from_parameter(society), |b| {
            b.iter(|| noe_core::run_simulation(black_box(config.clone())).unwrap())
        });
    }
    group.finish();
}

fn stats(c: &mut Criterion) {
    let (a, b) = paired_samples();
    c.bench_function("welch_t_test", |bench| {
        bench.iter(|| independent_t_test(black_box(&a), black_box(&b)).unwrap())
    });
    c.bench_function("glass_delta", |bench| {
        bench.iter(|| glass_delta(black_box(&a), black_box(&b)).unwrap())
    });
    let series: Vec<Option<f64>> = (0..3000)
        .map(|i| (i % 7 != 0).then(|| (i as f64).sin().abs()))
        .collect();
    c.bench_function("moving_average_3000", |bench| {
        bench.iter(|| moving_average(black_box(&series), 100))
    });
}

criterion_group!(benches, step_world, desk_run, stats);
criterion_main!(benches);
