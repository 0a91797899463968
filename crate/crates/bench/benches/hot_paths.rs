use std::hint::black_box;

use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use matchday_bench::{league_history, playable, scenario};
use matchday_core::analytics::{exact_distribution, hierarchical_bootstrap, mann_whitney, DEFAULT_PERCENTILES};
use matchday_core::backtest::run_backtest;
use matchday_core::strategies::dixon_coles::{fit_strengths, FitOptions};
use matchday_core::strategies::{build_strategy, StrategyConfig};
use matchday_core::LineConfig;

fn fit(c: &mut Criterion) {
    let (_, history) = league_history(3, 5);
    let as_of = NaiveDate::from_ymd_opt(2016, 7, 1).unwrap();
    let opts = FitOptions::default();
    c.bench_function("fit_strengths 3 seasons", |b| {
        b.iter(|| fit_strengths(black_box(&history), as_of, &opts, None).unwrap())
    });
}

fn bootstrap(c: &mut Criterion) {
    let trajectories: Vec<Vec<f64>> = (0..8)
        .map(|k| (0..120).map(|i| ((i * 7 + k * 13) % 17) as f64 * 0.01 - 0.08).collect())
        .collect();
    let mut group = c.benchmark_group("bootstrap");
    group.sample_size(10);
    group.bench_function("50000 sims x 120 steps", |b| {
        b.iter(|| hierarchical_bootstrap(black_box(&trajectories), 220.0, 50_000, 1, &DEFAULT_PERCENTILES).unwrap())
    });
    group.finish();
}

fn rank_test(c: &mut Criterion) {
    c.bench_function("exact_distribution 8x120", |b| b.iter(|| exact_distribution(black_box(8), 120)));
    let x: Vec<f64> = (0..8).map(|i| i as f64 * 1.7).collect();
    let y: Vec<f64> = (0..40).map(|i| i as f64 * 0.31 + 0.05).collect();
    c.bench_function("mann_whitney 8 vs 40", |b| b.iter(|| mann_whitney(black_box(&x), black_box(&y)).unwrap()));
}

fn season(c: &mut Criterion) {
    let data = playable(3, 9);
    let mut group = c.benchmark_group("season");
    group.sample_size(10);
    for name in ["favourites", "dixon_coles"] {
        group.bench_function(name, |b| {
            b.iter_batched(
                || build_strategy(name, &StrategyConfig::default()).unwrap(),
                |mut s| run_backtest(scenario(), data.clone(), LineConfig::default(), s.as_mut(), name).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, fit, bootstrap, rank_test, season);
criterion_main!(benches);
