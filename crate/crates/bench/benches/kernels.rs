use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

use gge_core::dynamics::{rk4_step, FlowKind};
use gge_core::eigen::eigen_angles;
use gge_core::equilibrium::{minimize_torus, SolverParams};
use gge_core::{
    build_periodic_cmv, sample_ensemble, stream_rng, EnsembleKind, EnsembleSpec, McmcParams, Potential,
    VerblunskyVector, C64,
};

fn random_alphas(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| C64::from_polar(0.9 * rng.gen::<f64>().sqrt(), rng.gen_range(-PI..PI))).collect()
}

fn cmv(c: &mut Criterion) {
    let mut g = c.benchmark_group("cmv");
    for n in [64usize, 256] {
        let v = VerblunskyVector::interior(random_alphas(n, 1)).unwrap();
        g.bench_with_input(BenchmarkId::new("build", n), &v, |b, v| b.iter(|| build_periodic_cmv(black_box(v)).unwrap()));
        let m = build_periodic_cmv(&v).unwrap();
        g.bench_with_input(BenchmarkId::new("trace_powers_4", n), &m, |b, m| b.iter(|| m.trace_powers(black_box(4))));
        g.bench_with_input(BenchmarkId::new("eigen_angles", n), &m, |b, m| b.iter(|| eigen_angles(black_box(m)).unwrap()));
    }
    g.finish();
}

fn flow(c: &mut Criterion) {
    let a = random_alphas(32, 2);
    c.bench_function("rk4_step_al_32", |b| b.iter(|| rk4_step(FlowKind::AL, black_box(&a), 1e-3).unwrap()));
}

fn solver(c: &mut Criterion) {
    let params = SolverParams { grid_size: 256, ..SolverParams::default() };
    let v = Potential::cosine(0.5);
    c.bench_function("minimize_torus_256", |b| b.iter(|| minimize_torus(black_box(&v), 1.0, &params).unwrap()));
}

fn sampling(c: &mut Criterion) {
    let spec = EnsembleSpec::new(EnsembleKind::AL, 64, 1.0, Potential::cosine(0.5)).unwrap();
    let mcmc = McmcParams { burn_in: 0, ..McmcParams::with_defaults(64, 10, 3) };
    c.bench_function("al_mcmc_10_states_64", |b| b.iter(|| sample_ensemble(black_box(&spec), &mcmc, 0).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = cmv, flow, solver, sampling
}
criterion_main!(benches);
