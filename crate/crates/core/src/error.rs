//! Error taxonomy shared by all solvers.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter or argument violates its documented range.
    #[error("invalid {field}: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    /// A constitutive function was evaluated outside its domain.
    #[error("domain error in {what}: {reason}")]
    Domain { what: &'static str, reason: String },

    /// The smallness condition `beta * w < 1` fails; the iteration theory
    /// gives no guarantees and the solvers refuse to run.
    #[error("inadmissible configuration: beta*w = {beta_w:.6} >= 1")]
    Inadmissible { beta_w: f64 },

    /// An iteration exhausted its budget. The last iterate is attached so a
    /// caller can inspect how far the solve got.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    /// The width condition C(w) never changed sign during the geometric scan.
    /// `scanned` holds the sampled (w, C(w)) pairs for diagnosis.
    #[error("no width root: C(w) kept its sign up to w = {w_max}")]
    NoRoot {
        w_max: f64,
        scanned: Vec<(f64, f64)>,
    },

    /// Adaptive quadrature hit its recursion cap before reaching tolerance.
    #[error("quadrature did not reach tolerance {tol:.3e} on [{a}, {b}]")]
    Quadrature { a: f64, b: f64, tol: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// Repeated step rejections drove the time step below its floor.
    #[error("time step collapsed below {dt_min:.3e} after repeated rejections")]
    StepUnderflow { dt_min: f64 },

    /// A measurement on a 2D state could not be taken (no interface, window
    /// ahead of the cord head, ...).
    #[error("measurement failed: {0}")]
    Measurement(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            what,
            reason: reason.into(),
        }
    }
}
