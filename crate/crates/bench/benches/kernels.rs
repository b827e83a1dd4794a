use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64 as C64;
use qtrans_core::algebra::{FockConfig, StateVector};
use qtrans_core::dynamics::{evolve, so3_propagator, TimeGrid};
use qtrans_core::model::{build_h2, Drive, EffectiveParams, LambdaStrategy, ModelParams, So3Coefficients};
use qtrans_core::protocols::{
    degenerate_transfer, driven_jc_ground_state, find_peak, fock_input, prepare_coherent,
    TransferOptions,
};

fn evolve_h2(c: &mut Criterion) {
    let p = ModelParams::new(1.0, 1.0, 1.3, 0.01, 0.01).unwrap();
    let mut group = c.benchmark_group("evolve_h2");
    for n in [4usize, 8, 10] {
        let cfg = FockConfig::with_cutoffs(n, n).unwrap();
        let h = build_h2(&p, &cfg).unwrap();
        let psi = StateVector::tripartite(&cfg, 0, 1, 0).unwrap();
        let grid = TimeGrid::uniform(0.0, 1000.0, 64).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| evolve(black_box(&h), &psi, &grid, 1e-6).unwrap())
        });
    }
    group.finish();
}

fn peak_search(c: &mut Criterion) {
    c.bench_function("find_peak_beating", |b| {
        b.iter(|| {
            find_peak(
                |t| (0.5 * t).sin().powi(2) * (1.0 + 0.01 * (37.0 * t).cos()),
                black_box(1.0),
                5.0,
                0.01,
            )
        })
    });
}

fn transfer(c: &mut Criterion) {
    let p = ModelParams::new(1.0, 1.0, 1.282842712474619, 0.01, 0.01).unwrap();
    let cfg = FockConfig::with_cutoffs(6, 6).unwrap();
    c.bench_function("degenerate_transfer_n1_cutoff6", |b| {
        b.iter(|| degenerate_transfer(&p, &fock_input(1), &cfg, None, &TransferOptions::default()).unwrap())
    });
}

fn so3(c: &mut Criterion) {
    let coeffs = So3Coefficients {
        gamma_0: 1.0,
        gamma_2: 0.3,
        gamma_3: -0.2,
    };
    let mut group = c.benchmark_group("so3_propagator");
    for n in [4usize, 8, 12] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| so3_propagator(&coeffs, n, n, black_box(17.0)).unwrap())
        });
    }
    group.finish();
}

fn coherent(c: &mut Criterion) {
    let p = ModelParams::new(1.0, 0.05, 1.3, 0.01, 0.02).unwrap();
    let eff = EffectiveParams::new(&p, LambdaStrategy::AsWritten).unwrap();
    let drive = Drive {
        mu: (eff.shifted_omega_b / eff.gamma_2).abs(),
        phi: 0.0,
    };
    let grid = TimeGrid::uniform(0.0, 2.0 * std::f64::consts::PI / eff.shifted_omega_b, 101).unwrap();
    c.bench_function("prepare_coherent_cutoff25", |b| {
        b.iter(|| prepare_coherent(&eff, &drive, 25, &grid, 1e-10).unwrap())
    });
    c.bench_function("driven_jc_ground_state_cutoff20", |b| {
        b.iter(|| driven_jc_ground_state(&p, black_box(C64::new(0.5, 0.2)), 20, 1e-10).unwrap())
    });
}

criterion_group!(benches, evolve_h2, peak_search, transfer, so3, coherent);
criterion_main!(benches);
