//! Criterion benchmarks for the pinning engines.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};
use pinning_core::partition::{contact_resolved, DEFAULT_CONTACT_CAP};
use pinning_core::tail_bounds::optimize_threshold;
use pinning_core::{trace, DisorderLaw, ExcursionLaw, PinningSystem};

fn gaussian_system(u: f64) -> PinningSystem {
    let law = ExcursionLaw::zeta(1.5, 0.0).unwrap();
    PinningSystem::new(1.0, u, law, DisorderLaw::gaussian(1.0).unwrap()).unwrap()
}

pub fn partition(c: &mut Criterion) {
    let mut group = c.benchmark_group("trace");
    group.sample_size(10);
    // the depinned side keeps every convolution term; the pinned side skips
    for (label, u) in [("depinned", -1.0), ("pinned", 0.5)] {
        let sys = gaussian_system(u);
        for n in [1024usize, 4096] {
            let r = sys.disorder.sample(n, 1);
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, &n| b.iter(|| trace(&sys, &r, n).unwrap()));
        }
    }
    group.finish();
}

pub fn contacts(c: &mut Criterion) {
    let mut group = c.benchmark_group("contact_resolved");
    group.sample_size(10);
    let sys = PinningSystem::deterministic(0.0, 0.0, ExcursionLaw::geometric(0.5, 0.0).unwrap()).unwrap();
    for n in [128usize, 512] {
        let r = sys.disorder.sample(n, 0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| contact_resolved(&sys, &r, n, DEFAULT_CONTACT_CAP).unwrap())
        });
    }
    group.finish();
}

pub fn rate_functions(c: &mut Criterion) {
    let zeta = ExcursionLaw::zeta(1.5, 0.0).unwrap();
    let geo = ExcursionLaw::geometric(0.5, 0.0).unwrap();
    c.bench_function("rate_j/zeta", |b| b.iter(|| zeta.rate_j(black_box(3.0))));
    c.bench_function("rate_j/geometric", |b| b.iter(|| geo.rate_j(black_box(4.0))));
    c.bench_function("free_energy_det/zeta", |b| {
        b.iter(|| pinning_core::free_energy_det(1.0, black_box(0.3), &zeta))
    });
}

pub fn strategy(c: &mut Criterion) {
    let law = ExcursionLaw::zeta(2.0, 0.0).unwrap();
    let pareto = DisorderLaw::shifted_pareto(1.5, 1.0).unwrap();
    let sys = PinningSystem::new(1.0, -5.0, law, pareto.clone()).unwrap();
    let n = 1 << 14;
    let r = pareto.sample(n, 3);
    let mut group = c.benchmark_group("optimize_threshold");
    group.sample_size(10);
    group.bench_function("pareto_2^14", |b| b.iter(|| optimize_threshold(&sys, &r, n).unwrap()));
    group.finish();
}
