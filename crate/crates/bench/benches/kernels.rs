use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use freeforms_core::admissibility::omega_mask;
use freeforms_core::*;

fn cumulant_conversion(c: &mut Criterion) {
    let mut group = c.benchmark_group("cumulants");
    for n in [8usize, 16, 32] {
        let k = CumulantSeq::new((1..=n).map(|s| 1.0 / s as f64).collect()).unwrap();
        let m = k.to_moments(n).unwrap();
        group.bench_with_input(BenchmarkId::new("to_moments", n), &n, |b, &n| b.iter(|| k.to_moments(black_box(n))));
        group.bench_with_input(BenchmarkId::new("from_moments", n), &m, |b, m| b.iter(|| moments_to_cumulants(black_box(m))));
    }
    group.finish();
}

fn admissibility(c: &mut Criterion) {
    let phi = PhiPoly::new(CumulantSeq::new(vec![0.0, 1.0, 0.1, 0.05]).unwrap());
    let mut group = c.benchmark_group("admissibility");
    group.sample_size(20);
    for (n_r, n_theta) in [(64usize, 128usize), (256, 512)] {
        group.bench_function(BenchmarkId::new("omega_mask", format!("{n_r}x{n_theta}")), |b| {
            b.iter(|| omega_mask(&phi, 4e-4, 4.0, n_r, n_theta).unwrap().outer_reaches_inner())
        });
    }
    let k = CumulantSeq::new(vec![0.0, 1.0, 0.1, 0.05]).unwrap();
    group.bench_function("is_admissible_default", |b| b.iter(|| is_admissible(black_box(&k), &AdmissibilityConfig::default())));
    group.finish();
}

fn subordination(c: &mut Criterion) {
    let bernoulli: Measure = AtomicMeasure::bernoulli().into();
    let semi: Measure = measures::semicircular(1.0, 0.0, 2001).unwrap().into();
    let z = Complex64::new(0.3, 0.05);
    c.bench_function("subordination/bernoulli_pair", |b| {
        b.iter(|| subordination_solve(&bernoulli, &bernoulli, black_box(z), 1e-12, 500))
    });
    c.bench_function("subordination/semicircle_bernoulli", |b| {
        b.iter(|| subordination_solve(&semi, &bernoulli, black_box(z), 1e-12, 500))
    });
}

fn recovery(c: &mut Criterion) {
    let phi = PhiPoly::new(CumulantSeq::new(vec![0.0, 1.0, 0.1, 0.05]).unwrap());
    let grid = GridSpec::new(-3.0, 3.0, 1001).unwrap();
    let cfg = RecoveryConfig { check_admissible: false, ..Default::default() };
    let mut group = c.benchmark_group("recovery");
    group.sample_size(20);
    group.bench_function("recover_measure_1001", |b| b.iter(|| recover_measure(&phi, &grid, &cfg)));
    group.finish();
}

criterion_group!(benches, cumulant_conversion, admissibility, subordination, recovery);
criterion_main!(benches);
