//! Timings of the hot paths: width solves, the admissibility optimizer, the
//! stationary fixed point, and one implicit 2D step at production resolution.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use cordsim_bench::bench_params;
use cordsim_core::evolution::{EvolutionConfig, InitialShape, Simulation};
use cordsim_core::freeboundary::{reconstruct_and_errors, solve_width_general, solve_width_linear};
use cordsim_core::stationary::{fixed_point, SolverOptions};
use cordsim_core::{Grid1D, Grid2D};

fn width_solvers(c: &mut Criterion) {
    let p = bench_params().unwrap();
    c.bench_function("solve_width_linear", |b| {
        b.iter(|| solve_width_linear(&p).unwrap())
    });
    c.bench_function("solve_width_general", |b| {
        b.iter(|| solve_width_general(&p).unwrap())
    });
    c.bench_function("optimal_epsilon", |b| {
        b.iter(|| p.optimal_epsilon().unwrap())
    });
}

fn stationary_solver(c: &mut Criterion) {
    let p = bench_params().unwrap();
    let grid = Grid1D::new(2001).unwrap();
    let opts = SolverOptions::default();
    let w0 = solve_width_linear(&p).unwrap().w0;
    c.bench_function("fixed_point_n2001", |b| {
        b.iter(|| fixed_point(w0, &p, &grid, &opts).unwrap())
    });
    c.bench_function("reconstruct_and_errors_n2001", |b| {
        b.iter(|| reconstruct_and_errors(w0, &p, &grid, &opts).unwrap())
    });
}

fn evolution_step(c: &mut Criterion) {
    let cfg = EvolutionConfig {
        grid: Grid2D::new(128, 512, 2.5, 10.0).unwrap(),
        params: bench_params().unwrap(),
        dt: Some(0.05),
        t_end: 900.0,
        snapshot_times: Vec::new(),
        r0: 0.5,
        initial_shape: InitialShape::QuarterDisk,
        reinit_every: 20,
        heaviside_width: 1.5,
    };
    // Warm past the initial transient so the timed step is representative.
    let mut warm = Simulation::new(cfg.clone()).unwrap();
    warm.advance_to(5.0).unwrap();
    let state = warm.state().clone();

    let mut group = c.benchmark_group("evolution");
    group.sample_size(10);
    group.bench_function("step_128x512", |b| {
        b.iter_batched_ref(
            || Simulation::from_state(cfg.clone(), state.clone()).unwrap(),
            |sim| sim.step().unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, width_solvers, stationary_solver, evolution_step);
criterion_main!(benches);
