//! Sequential against rayon-parallel evaluation of the hot paths.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tmscatter::hamiltonian::Problem;
use tmscatter::par::Execution;
use tmscatter::scatter::{spectral_singularity_scan, ScanGrid};
use tmscatter::transfer::{fundamental_tm, slice_tms};
use tmscatter::{build_grid, EvolveSettings, PotentialSpec, C};

fn settings(e: Execution) -> EvolveSettings {
    EvolveSettings::default().with_execution(e)
}

fn fundamental(c: &mut Criterion) {
    let spec = PotentialSpec::gaussian(C::new(0.6, 0.2), 0.5, 1.0);
    let g = build_grid(1.0, 48, 16, 4.0).unwrap();
    let pb = Problem::new(&spec, &g.sectors).unwrap();
    let mut group = c.benchmark_group("fundamental_tm");
    group.sample_size(10);
    for e in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{e:?}")),
            &e,
            |b, &e| b.iter(|| fundamental_tm(&pb, &settings(e)).unwrap()),
        );
    }
    group.finish();
}

fn slices(c: &mut Criterion) {
    let spec = PotentialSpec::gaussian(C::new(0.6, 0.2), 0.5, 1.0);
    let g = build_grid(1.0, 16, 8, 4.0).unwrap();
    let pb = Problem::new(&spec, &g.sectors).unwrap();
    let mut group = c.benchmark_group("slice_tms_8");
    group.sample_size(10);
    for e in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{e:?}")),
            &e,
            |b, &e| b.iter(|| slice_tms(&pb, 8, &settings(e)).unwrap()),
        );
    }
    group.finish();
}

fn scan(c: &mut Criterion) {
    let spec = PotentialSpec::gaussian(C::new(0.6, 0.2), 0.5, 1.0);
    let ks: Vec<f64> = (0..8).map(|i| 0.5 + 0.1 * i as f64).collect();
    let grid = ScanGrid {
        n_osc: 16,
        n_ev: 8,
        p_max_over_k: 4.0,
    };
    let mut group = c.benchmark_group("scan_8_wavenumbers");
    group.sample_size(10);
    for e in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{e:?}")),
            &e,
            |b, &e| b.iter(|| spectral_singularity_scan(&spec, &ks, grid, &settings(e)).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, fundamental, slices, scan);
criterion_main!(benches);
