use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use critmass_bench::{gaussian, grid, params};
use critmass_core::solver::{step, SimState, SolverConfig};
use critmass_core::variational::{
    maximize, rearrange_decreasing, MaximizeOpts, ObjectiveSpec,
};
use critmass_core::{free_energy, interaction_energy, newtonian_potential, RadialDensity};

fn bench_potential(c: &mut Criterion) {
    let mut group = c.benchmark_group("newtonian_potential");
    for n in [256usize, 1024, 4096] {
        let g = grid(n);
        let u = gaussian(&g, 1.0, 0.25);
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| newtonian_potential(u))
        });
    }
    group.finish();
}

fn bench_interaction_energy(c: &mut Criterion) {
    let mut group = c.benchmark_group("interaction_energy");
    for n in [256usize, 1024, 4096] {
        let g = grid(n);
        let u1 = gaussian(&g, 1.0, 0.25);
        let u2 = gaussian(&g, 0.7, 0.35);
        group.bench_with_input(BenchmarkId::from_parameter(n), &(u1, u2), |b, (u1, u2)| {
            b.iter(|| interaction_energy(u1, u2))
        });
    }
    group.finish();
}

fn bench_free_energy(c: &mut Criterion) {
    let p = params();
    let g = grid(1024);
    let u1 = gaussian(&g, 1.0, 0.25);
    let u2 = gaussian(&g, 0.7, 0.35);
    c.bench_function("free_energy/1024", |b| b.iter(|| free_energy(&u1, &u2, &p)));
}

fn bench_solver_step(c: &mut Criterion) {
    let p = params();
    let mut group = c.benchmark_group("solver_step");
    for n in [256usize, 1024] {
        let g = grid(n);
        let cfg = SolverConfig::new(p, Arc::clone(&g));
        let state = SimState {
            t: 0.0,
            u1: gaussian(&g, 0.6, 0.2),
            u2: gaussian(&g, 0.5, 0.25),
            step_count: 0,
        };
        let dt = 1e-7;
        group.bench_with_input(BenchmarkId::from_parameter(n), &state, |b, s| {
            b.iter(|| step(s, &cfg, dt))
        });
    }
    group.finish();
}

fn bench_rearrange(c: &mut Criterion) {
    let g = grid(1024);
    // Non-monotone input so the layer-cake path actually runs.
    let h = RadialDensity::from_fn(Arc::clone(&g), |r| {
        (1.0 + (5.0 * r).sin()).max(0.0) * (-r).exp()
    });
    c.bench_function("rearrange_decreasing/1024", |b| b.iter(|| rearrange_decreasing(&h)));
}

fn bench_maximize(c: &mut Criterion) {
    let p = params();
    let spec = ObjectiveSpec::c_star(p).expect("balanced pair admits the objective");
    let g = grid(128);
    c.bench_function("maximize_c_star/128", |b| {
        b.iter(|| maximize(&spec, &MaximizeOpts::new(Arc::clone(&g))))
    });
}

criterion_group!(
    kernels,
    bench_potential,
    bench_interaction_energy,
    bench_free_energy,
    bench_solver_step,
    bench_rearrange,
    bench_maximize
);
criterion_main!(kernels);
