//! Benchmark-only crate; the benchmarks live under `benches/`.
//!
//! Shared setup for the timed paths: a baseline parameter set with the
//! optimal cutoff already applied, so benches measure solves, not setup.

use cordsim_core::{ModelParams, Result};

/// Baseline parameters with the admissibility-optimal cutoff.
pub fn bench_params() -> Result<ModelParams> {
    ModelParams::baseline().with_optimal_epsilon()
}
