//! Compares the data-parallel grid map against the sequential fallback on the
//! two workloads that dominate real runs: harvesting sweeps and channel-symbol
//! simulation.
//!
//! `map_grid` dispatches to rayon under the default `rayon` feature and to a
//! plain iterator when built with `--no-default-features`, so running this
//! bench in both configurations measures the parallel speedup directly.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use fso_swipt_core::circuit::{
    solve_dc_operating_point, spectral_response, CircuitParams, DiodeModel, PhysicalConstants,
};
use fso_swipt_core::eh::{harvested_power_closed_form, EhModelParams};
use fso_swipt_core::rate::{DistributionKind, RateConfig, TransmitDistribution};
use fso_swipt_core::sweep::{channel_samples, log_grid, map_grid, map_grid_seq};

fn harvesting_grid(c: &mut Criterion) {
    let circuit = CircuitParams::default();
    let model = EhModelParams::from_circuit(circuit).unwrap();
    let consts = PhysicalConstants::default();
    let powers = log_grid(1e-6, 100e-3, 300).unwrap();
    let grid: Vec<(f64, f64)> = [400e-9, 950e-9]
        .iter()
        .flat_map(|&l| {
            let r0 = spectral_response(l, 0.7, &consts);
            powers.iter().map(move |&p| (r0, p))
        })
        .collect();
    let row = |&(r0, p): &(f64, f64)| {
        let closed = harvested_power_closed_form(&model, r0, p, 0.0)?.power;
        let oracle = solve_dc_operating_point(r0 * p, &circuit, DiodeModel::full())?.p_harv;
        Ok(closed + oracle)
    };

    let mut group = c.benchmark_group("harvesting_grid_600pts");
    group.sample_size(20);
    group.bench_function("map_grid", |b| {
        b.iter(|| map_grid(black_box(&grid), row).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| map_grid_seq(black_box(&grid), row).unwrap())
    });
    group.finish();
}

fn channel_sampling(c: &mut Criterion) {
    let model = EhModelParams::from_circuit(CircuitParams::default()).unwrap();
    let r0 = spectral_response(950e-9, 0.7, &PhysicalConstants::default());
    let cfg = RateConfig::new(model, r0, 1.0, 0.0, 10e-3, 1e-9).unwrap();
    let dist = TransmitDistribution::new(DistributionKind::AmplitudeUniform, cfg).unwrap();

    let mut group = c.benchmark_group("channel_sampling_20k");
    group.sample_size(20);
    group.bench_function("map_grid", |b| {
        b.iter(|| channel_samples(black_box(&dist), 20_000, 42).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| dist.simulate_channel(black_box(20_000), 42).unwrap())
    });
    group.finish();
}

criterion_group!(benches, harvesting_grid, channel_sampling);
criterion_main!(benches);
