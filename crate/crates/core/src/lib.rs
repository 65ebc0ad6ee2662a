//! Numerical toolkit for a nutrient-limited tumor cord growing around a
//! blood vessel, modeled as a deformable porous medium.
//!
//! The cord occupies a region next to the vessel wall and exchanges volume
//! with the host through a sharp interface. In nondimensional form the cell
//! fraction `phi` obeys a degenerate nonlinear diffusion equation driven by
//! nutrient-regulated growth, the nutrient `c` obeys a reaction-diffusion
//! equation with uptake inside the cord, and the interface moves with the
//! cell flux. The crate provides:
//!
//! * [`constitutive`]: stress and growth laws, derived constants, and the
//!   admissibility margin `beta * w < 1` with its optimal splitting `eps*`.
//! * [`stationary`]: the transverse 1D stationary profiles via a fixed-point
//!   iteration on second-order finite differences.
//! * [`freeboundary`]: the selected cord half-width `w0` (root of the net
//!   proliferation condition) and the closed-form/perturbative profiles.
//! * [`evolution`]: a 2D level-set simulation of the full moving-boundary
//!   problem on a rectangle next to the vessel.
//! * [`diagnostics`]: measurements on 2D states and comparison against the
//!   1D theory.
//!
//! All solvers are deterministic: identical inputs produce bitwise identical
//! outputs.

// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constitutive;
pub mod csvio;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod freeboundary;
pub mod grid;
pub mod levelset;
pub mod linalg;
pub mod quadrature;
pub mod stationary;

pub use constitutive::{DerivedConstants, GrowthRegulation, ModelParams};
pub use diagnostics::{CordMetrics, TheoryComparison};
pub use error::{Error, Result};
pub use evolution::{
    EvolutionConfig, EvolutionState, InitialShape, RunResult, Simulation, Snapshot,
};
pub use freeboundary::{PerturbationCheck, WidthSolution};
pub use grid::{Field1D, Field2D, Grid1D, Grid2D};
pub use stationary::{SolverOptions, StationaryChecks, StationarySolution};
