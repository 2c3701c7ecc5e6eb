//! Sweep throughput with and without the rayon pool. Run once with the
//! default features and once with `--no-default-features`; the benchmark
//! ids carry the execution mode so the two reports sit side by side.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use jtwpa::units::ghz_to_rad;
use jtwpa::{depletion, double_pump, lattice, mixing, Handedness, LineParameters, PumpDrive};

const MODE: &str = if cfg!(feature = "parallel") {
    "parallel"
} else {
    "sequential"
};

fn reference_left() -> LineParameters {
    LineParameters::with_josephson_i0(1.670e-9, 9.6e-15, 667e-15, 10e-6, Handedness::Left).unwrap()
}

fn flat_band_left() -> LineParameters {
    LineParameters::with_josephson_i0(1.9894e-9, 88.4e-15, 795.8e-15, 10e-6, Handedness::Left)
        .unwrap()
}

fn detuning_sweep(c: &mut Criterion) {
    let params = reference_left();
    let pump = PumpDrive::from_ratio(ghz_to_rad(7.5), 0.5, &params).unwrap();
    let length = 1000.0 * params.a;
    let mut group = c.benchmark_group("detuning_sweep");
    for n in [201usize, 2001] {
        let deltas = mixing::default_detuning_grid(&params, &pump, n).unwrap();
        group.bench_with_input(BenchmarkId::new(MODE, n), &deltas, |b, deltas| {
            b.iter(|| mixing::gain_sweep(&params, &pump, deltas, length).unwrap())
        });
    }
    group.finish();
}

fn double_pump_profile(c: &mut Criterion) {
    let params = flat_band_left();
    let drive = double_pump::DoublePumpDrive::from_ratios(
        &params,
        ghz_to_rad(8.38),
        0.5,
        ghz_to_rad(11.22),
        0.5,
    )
    .unwrap();
    let length = 1500.0 * params.a;
    let omegas = double_pump::default_signal_grid(&params, &drive, 1201).unwrap();
    let mut group = c.benchmark_group("double_pump_profile");
    group.bench_with_input(BenchmarkId::new(MODE, 1201), &omegas, |b, omegas| {
        b.iter(|| double_pump::gain_profile(&params, &drive, omegas, length).unwrap())
    });
    group.finish();
}

fn depletion_propagation(c: &mut Criterion) {
    let params = reference_left();
    let pump = PumpDrive::from_ratio(ghz_to_rad(7.5), 0.5, &params).unwrap();
    let settings = depletion::IntegrationSettings::default();
    let length = 1000.0 * params.a;
    let mut group = c.benchmark_group("depletion_propagation");
    group.sample_size(20);
    group.bench_function(BenchmarkId::new(MODE, "ratio_1e-2"), |b| {
        b.iter(|| {
            depletion::gain_with_depletion(&params, &pump, 0.0805, 1e-2, length, &settings)
                .unwrap()
        })
    });
    group.finish();
}

fn lattice_stepping(c: &mut Criterion) {
    let params = reference_left();
    let f_plasma = params.omega_j() / std::f64::consts::TAU;
    let dt = 0.02 / f_plasma;
    let mut group = c.benchmark_group("lattice_stepping");
    group.sample_size(20);
    group.bench_function(BenchmarkId::new(MODE, "100x2000"), |b| {
        b.iter(|| lattice::ring_down_energy_audit(&params, 100, dt, 2000, 0.02).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    detuning_sweep,
    double_pump_profile,
    depletion_propagation,
    lattice_stepping
);
criterion_main!(benches);
