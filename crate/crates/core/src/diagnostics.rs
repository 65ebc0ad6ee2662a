//! Measurements on evolved 2D states (head position, tail width, nutrient
//! penetration, viable fraction) and their comparison against the 1D
//! stationary theory.
//!
//! All geometric quantities come from linear interpolation of the level set
//! along grid lines, so they are sub-cell accurate whenever `psi` is close
//! to a signed distance.

use crate::constitutive::{GrowthRegulation, ModelParams};
use crate::error::{Error, Result};
use crate::evolution::EvolutionState;
use crate::freeboundary::{solve_width_general, solve_width_linear, xbar_of_w};
use crate::grid::Grid2D;
use crate::levelset::{connected_regions, smoothed_indicator};

/// Scalar measurements of one cord state.
#[derive(Debug, Clone)]
pub struct CordMetrics {
    /// Largest z reached by the cord (interpolated interface crossing).
    pub head_position: f64,
    /// Mean transverse interface position over the tail window.
    pub tail_width: f64,
    /// The z-window actually used for the tail average.
    pub window: (f64, f64),
    /// Mean depth at which `c` crosses the threshold `c0` inside the window,
    /// `None` when the nutrient never drops that far.
    pub xbar_measured: Option<f64>,
    /// Fraction of the (smoothed) cord area where `c >= c0`.
    pub viable_fraction: f64,
    /// Number of connected components of `psi < 0`.
    pub regions: usize,
}

/// Default tail-averaging window: the rear 10% to 40% of the cord length,
/// away from both the z = 0 symmetry plane and the curved head.
pub fn default_tail_window(head_position: f64) -> (f64, f64) {
    (0.1 * head_position, 0.4 * head_position)
}

/// Measures a cord state. `window` overrides the default tail window;
/// `indicator_halfwidth` is the smoothing half-width used for area
/// integrals (normally the evolution's own value).
///
/// Errors when the cord is empty, when the window is empty or reaches ahead
/// of the measured head, or when a window row carries no interface.
pub fn measure(
    state: &EvolutionState,
    grid: &Grid2D,
    window: Option<(f64, f64)>,
    indicator_halfwidth: f64,
    c_threshold: f64,
) -> Result<CordMetrics> {
    let nx = grid.nx();
    let nz = grid.nz();
    let psi = state.psi.as_slice();
    let c = state.c.as_slice();

    // Head: per column, the interpolated z of the outermost sign change.
    let mut head: Option<f64> = None;
    for i in 0..nx {
        let mut top: Option<f64> = None;
        for j in (0..nz).rev() {
            if psi[j * nx + i] < 0.0 {
                top = Some(if j + 1 < nz {
                    let a = psi[j * nx + i];
                    let b = psi[(j + 1) * nx + i];
                    grid.z(j) + grid.hz() * a / (a - b)
                } else {
                    grid.lz()
                });
                break;
            }
        }
        if let Some(t) = top {
            head = Some(head.map_or(t, |h: f64| h.max(t)));
        }
    }
    let head =
        head.ok_or_else(|| Error::Measurement("no cord: psi >= 0 on the whole grid".to_string()))?;

    let window = window.unwrap_or_else(|| default_tail_window(head));
    let (zlo, zhi) = window;
    if !(zlo >= 0.0 && zlo < zhi && zhi <= grid.lz()) {
        return Err(Error::Measurement(format!(
            "bad tail window [{zlo}, {zhi}]"
        )));
    }
    if zhi > head {
        return Err(Error::Measurement(format!(
            "tail window [{zlo}, {zhi}] reaches ahead of the cord head at {head}"
        )));
    }

    // Tail width and nutrient penetration averaged over the window rows.
    let mut width_sum = 0.0;
    let mut width_rows = 0usize;
    let mut xbar_sum = 0.0;
    let mut xbar_rows = 0usize;
    for j in 0..nz {
        let z = grid.z(j);
        if z < zlo || z > zhi {
            continue;
        }
        let row = &psi[j * nx..(j + 1) * nx];
        let mut crossing = None;
        for i in (0..nx - 1).rev() {
            if row[i] < 0.0 && row[i + 1] >= 0.0 {
                crossing = Some(grid.x(i) + grid.hx() * row[i] / (row[i] - row[i + 1]));
                break;
            }
        }
        let width = match crossing {
            Some(x) => x,
            None if row[nx - 1] < 0.0 => grid.lx(),
            None => {
                return Err(Error::Measurement(format!(
                    "window row z = {z} carries no cord"
                )))
            }
        };
        width_sum += width;
        width_rows += 1;

        let crow = &c[j * nx..(j + 1) * nx];
        for i in 0..nx - 1 {
            if crow[i] >= c_threshold && crow[i + 1] < c_threshold {
                xbar_sum +=
                    grid.x(i) + grid.hx() * (crow[i] - c_threshold) / (crow[i] - crow[i + 1]);
                xbar_rows += 1;
                break;
            }
        }
    }
    if width_rows == 0 {
        return Err(Error::Measurement(format!(
            "tail window [{zlo}, {zhi}] contains no grid row"
        )));
    }

    // Viable fraction: smoothed cord area weighted by the c >= c0 test.
    let mut area = 0.0;
    let mut viable = 0.0;
    for j in 0..nz {
        for i in 0..nx {
            let k = j * nx + i;
            let m = grid.weight(i, j) * smoothed_indicator(psi[k], indicator_halfwidth);
            area += m;
            if c[k] >= c_threshold {
                viable += m;
            }
        }
    }

    Ok(CordMetrics {
        head_position: head,
        tail_width: width_sum / width_rows as f64,
        window,
        xbar_measured: (xbar_rows > 0).then(|| xbar_sum / xbar_rows as f64),
        viable_fraction: viable / area,
        regions: connected_regions(&state.psi, grid),
    })
}

/// Measured tail width against the stationary width theory.
#[derive(Debug, Clone)]
pub struct TheoryComparison {
    pub w0: f64,
    pub beta_w0: f64,
    /// `beta * w0 < 1`: the regime where the stationary theory applies.
    pub admissible: bool,
    /// Set when the prediction must not be trusted (`beta * w0 >= 1`).
    pub rejected: bool,
    pub tail_width: f64,
    /// `|tail_width - w0| / w0`.
    pub rel_width_error: f64,
    /// Nutrient threshold depth predicted by the width solution, as a
    /// fraction of the cord width.
    pub xbar_theory: Option<f64>,
    /// Measured threshold depth rescaled by the measured width.
    pub xbar_measured_scaled: Option<f64>,
}

/// Solves the width problem for `p` (closed form for linear regulation,
/// scan plus bisection otherwise) and tabulates it against the measurement.
pub fn compare_to_theory(metrics: &CordMetrics, p: &ModelParams) -> Result<TheoryComparison> {
    let sol = match p.regulation {
        GrowthRegulation::Linear => solve_width_linear(p)?,
        GrowthRegulation::TwoThreshold { .. } => solve_width_general(p)?,
    };
    let rel = (metrics.tail_width - sol.w0).abs() / sol.w0;
    Ok(TheoryComparison {
        w0: sol.w0,
        beta_w0: sol.beta_w0,
        admissible: sol.admissible,
        rejected: !sol.admissible,
        tail_width: metrics.tail_width,
        rel_width_error: rel,
        xbar_theory: xbar_of_w(sol.w0, p),
        xbar_measured_scaled: metrics.xbar_measured.map(|x| x / metrics.tail_width),
    })
}

impl TheoryComparison {
    /// Human-readable table; CSV output lives in the IO module.
    pub fn render(&self, metrics: &CordMetrics) -> String {
        let mut s = String::new();
        s.push_str("cord metrics vs stationary theory\n");
        s.push_str(&format!(
            "  head position        {:.5e}\n",
            metrics.head_position
        ));
        s.push_str(&format!("  tail width           {:.5e}\n", self.tail_width));
        s.push_str(&format!("  stationary width w0  {:.5e}\n", self.w0));
        s.push_str(&format!(
            "  width deviation      {:.5e} (relative)\n",
            self.rel_width_error
        ));
        s.push_str(&format!(
            "  beta * w0            {:.5e} ({})\n",
            self.beta_w0,
            if self.admissible {
                "admissible"
            } else {
                "REJECTED: outside the contraction regime"
            }
        ));
        match (self.xbar_measured_scaled, self.xbar_theory) {
            (Some(m), Some(t)) => {
                s.push_str(&format!("  xbar measured/width  {m:.5e}\n"));
                s.push_str(&format!("  xbar theory          {t:.5e}\n"));
            }
            _ => s.push_str("  xbar                 not crossed\n"),
        }
        s.push_str(&format!(
            "  viable fraction      {:.5e}\n",
            metrics.viable_fraction
        ));
        s.push_str(&format!("  connected regions    {}\n", metrics.regions));
        s
    }
}
