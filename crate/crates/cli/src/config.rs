//! The TOML run configuration: one file with one section per module. Every
//! key has a default, unknown keys are rejected, and each run emits a
//! `resolved_config.toml` with all defaults spelled out so the run can be
//! reproduced from the output directory alone.

use std::path::Path;

use serde::{Deserialize, Serialize};

use cordsim_core::evolution::{EvolutionConfig, InitialShape, DEFAULT_DT};
use cordsim_core::stationary::SolverOptions;
use cordsim_core::{Grid2D, GrowthRegulation, ModelParams};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub stationary: StationarySection,
    pub width: WidthSection,
    pub evolve: EvolveSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub mu: f64,
    pub phi0: f64,
    pub gamma: f64,
    pub c0: f64,
    pub alpha: f64,
    /// Lower cell-fraction cutoff of the admissibility constants; omit to
    /// use the optimum for the given parameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub regulation: RegulationSection,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            mu: 3.0,
            phi0: 0.75,
            gamma: 0.7,
            c0: 0.8,
            alpha: 0.5,
            epsilon: None,
            regulation: RegulationSection::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegulationSection {
    /// "linear" or "two-threshold".
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
}

impl Default for RegulationSection {
    fn default() -> Self {
        RegulationSection {
            kind: "linear".to_string(),
            gamma0: None,
            gamma1: None,
            c1: None,
        }
    }
}

impl RegulationSection {
    fn to_core(&self) -> Result<GrowthRegulation, CliError> {
        match self.kind.as_str() {
            "linear" => {
                if self.gamma0.is_some() || self.gamma1.is_some() || self.c1.is_some() {
                    return Err(CliError::Config(
                        "model.regulation: gamma0/gamma1/c1 only apply to kind = \"two-threshold\""
                            .to_string(),
                    ));
                }
                Ok(GrowthRegulation::Linear)
            }
            "two-threshold" => match (self.gamma0, self.gamma1, self.c1) {
                (Some(gamma0), Some(gamma1), Some(c1)) => {
                    Ok(GrowthRegulation::TwoThreshold { gamma0, gamma1, c1 })
                }
                _ => Err(CliError::Config(
                    "model.regulation: kind = \"two-threshold\" requires gamma0, gamma1, and c1"
                        .to_string(),
                )),
            },
            other => Err(CliError::Config(format!(
                "model.regulation.kind: unknown value {other:?} (expected \"linear\" or \"two-threshold\")"
            ))),
        }
    }
}

impl ModelSection {
    /// Builds and validates the core parameter set, resolving an omitted
    /// epsilon to the admissibility optimum.
    pub fn params(&self) -> Result<ModelParams, CliError> {
        let p = ModelParams {
            mu: self.mu,
            phi0: self.phi0,
            gamma: self.gamma,
            c0: self.c0,
            alpha: self.alpha,
            regulation: self.regulation.to_core()?,
            // Placeholder inside the valid range; replaced below when the
            // user did not pin a value.
            epsilon: self.epsilon.unwrap_or(0.5 * self.phi0),
        };
        p.validate().map_err(CliError::config)?;
        if self.epsilon.is_none() {
            p.with_optimal_epsilon().map_err(CliError::config)
        } else {
            Ok(p)
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationarySection {
    /// Cord half-width the transverse profiles are solved at.
    pub w: f64,
    /// Transverse nodes.
    pub n: usize,
    /// Sup-norm tolerance of the outer fixed-point iteration.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for StationarySection {
    fn default() -> Self {
        StationarySection {
            w: 1.0,
            n: 501,
            tol: 1e-10,
            max_iters: 500,
        }
    }
}

impl StationarySection {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            ..SolverOptions::default()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.w >= 0.0) || !self.w.is_finite() {
            return Err(CliError::Config(format!(
                "stationary.w: {} (must be finite and >= 0)",
                self.w
            )));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(CliError::Config(
                "stationary: tol must be > 0 and max_iters >= 1".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct WidthSection {
    /// Transverse nodes of the emitted profile reconstruction.
    pub n: usize,
}

impl Default for WidthSection {
    fn default() -> Self {
        WidthSection { n: 1001 }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub nx: usize,
    pub nz: usize,
    pub lx: f64,
    pub lz: f64,
    /// Initial time step; omit for the built-in default. Rejected steps
    /// halve it at runtime.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub r0: f64,
    /// "quarter-disk" or "stripe".
    pub shape: String,
    pub reinit_every: usize,
    pub heaviside_width: f64,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection {
            nx: 128,
            nz: 512,
            lx: 2.5,
            lz: 10.0,
            dt: None,
            t_end: 900.0,
            snapshots: vec![100.0, 325.0, 650.0, 900.0],
            r0: 0.5,
            shape: "quarter-disk".to_string(),
            reinit_every: 20,
            heaviside_width: 1.5,
        }
    }
}

impl EvolveSection {
    pub fn evolution_config(&self, params: ModelParams) -> Result<EvolutionConfig, CliError> {
        let grid = Grid2D::new(self.nx, self.nz, self.lx, self.lz).map_err(CliError::config)?;
        let initial_shape = match self.shape.as_str() {
            "quarter-disk" => InitialShape::QuarterDisk,
            "stripe" => InitialShape::Stripe,
            other => {
                let msg = format!(
                    "evolve.shape: unknown value {other:?} (expected \"quarter-disk\" or \"stripe\")"
                );
                return Err(CliError::Config(msg));
            }
        };
        let cfg = EvolutionConfig {
            grid,
            params,
            dt: self.dt,
            t_end: self.t_end,
            snapshot_times: self.snapshots.clone(),
            r0: self.r0,
            initial_shape,
            reinit_every: self.reinit_every,
            heaviside_width: self.heaviside_width,
        };
        cfg.validate().map_err(CliError::config)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
}

/// Explicit value lists of a sweep, in the loop nesting order.
#[derive(Debug, Clone)]
pub struct SweepLists {
    pub mu: Vec<f64>,
    pub phi0: Vec<f64>,
    pub gamma: Vec<f64>,
    pub c0: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl SweepSection {
    /// Fills omitted axes with the single value from the model section.
    pub fn lists(&self, model: &ModelSection) -> Result<SweepLists, CliError> {
        fn axis(name: &str, given: &Option<Vec<f64>>, fallback: f64) -> Result<Vec<f64>, CliError> {
            match given {
                Some(v) if v.is_empty() => {
                    Err(CliError::Config(format!("sweep.{name}: empty list")))
                }
                Some(v) => Ok(v.clone()),
                None => Ok(vec![fallback]),
            }
        }
        Ok(SweepLists {
            mu: axis("mu", &self.mu, model.mu)?,
            phi0: axis("phi0", &self.phi0, model.phi0)?,
            gamma: axis("gamma", &self.gamma, model.gamma)?,
            c0: axis("c0", &self.c0, model.c0)?,
            alpha: axis("alpha", &self.alpha, model.alpha)?,
        })
    }
}

impl SweepLists {
    pub fn len(&self) -> usize {
        self.mu.len() * self.phi0.len() * self.gamma.len() * self.c0.len() * self.alpha.len()
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}", path.display()), e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// The configuration with every default spelled out: the epsilon in
    /// force, the initial time step, and explicit sweep lists.
    pub fn resolved(&self, params: &ModelParams) -> Result<RunConfig, CliError> {
        let mut r = self.clone();
        r.model.epsilon = Some(params.epsilon);
        r.evolve.dt = Some(self.evolve.dt.unwrap_or(DEFAULT_DT));
        let lists = self.sweep.lists(&self.model)?;
        r.sweep = SweepSection {
            mu: Some(lists.mu),
            phi0: Some(lists.phi0),
            gamma: Some(lists.gamma),
            c0: Some(lists.c0),
            alpha: Some(lists.alpha),
        };
        Ok(r)
    }
}
