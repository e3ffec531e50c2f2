use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use latent_hazard::decision::optimize_threshold;
use latent_hazard::evaluation::criterion_paths;
use latent_hazard::likelihood::{loss_and_gradient, regularized_loss};
use latent_hazard::optimizer::fit_coordinate_descent;
use latent_hazard::simulator::simulate_dataset;
use latent_hazard::{CostSpec, FitConfig, ModelParams, RegularizedLossSpec, SimConfig};

const TRUTH: [f64; 4] = [-14.0, 5.0, -7.0, 0.5];

fn likelihood(c: &mut Criterion) {
    let theta = ModelParams::from_slice(&TRUTH).unwrap();
    let spec = RegularizedLossSpec::new(0.1, 0.1).unwrap();
    let mut group = c.benchmark_group("likelihood");
    for n in [100, 1000] {
        let data = simulate_dataset(&SimConfig::sec61(n, 1)).unwrap();
        group.bench_with_input(BenchmarkId::new("loss", n), &data, |b, d| {
            b.iter(|| regularized_loss(black_box(&theta), d, &spec).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("loss_and_gradient", n), &data, |b, d| {
            b.iter(|| loss_and_gradient(black_box(&theta), d, &spec).unwrap())
        });
    }
    group.finish();
}

fn fit(c: &mut Criterion) {
    let data = simulate_dataset(&SimConfig::sec61(100, 2)).unwrap();
    let spec = RegularizedLossSpec::new(0.1, 0.1).unwrap();
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("coordinate_descent_n100", |b| {
        b.iter(|| fit_coordinate_descent(&data, &spec, &FitConfig::default()).unwrap())
    });
    group.finish();
}

fn threshold(c: &mut Criterion) {
    let theta = ModelParams::from_slice(&TRUTH).unwrap();
    let data = simulate_dataset(&SimConfig::sec61(1000, 3)).unwrap();
    let paths = criterion_paths(&theta, &data, Default::default()).unwrap();
    let cost = CostSpec::new(5, 1.0, 1.0).unwrap();
    c.bench_function("optimize_threshold_n1000", |b| {
        b.iter(|| optimize_threshold(black_box(&paths), &cost, false).unwrap())
    });
}

fn simulate(c: &mut Criterion) {
    c.bench_function("simulate_sec61_n1000", |b| {
        b.iter(|| simulate_dataset(&SimConfig::sec61(1000, black_box(4))).unwrap())
    });
}

criterion_group!(benches, likelihood, fit, threshold, simulate);
criterion_main!(benches);
