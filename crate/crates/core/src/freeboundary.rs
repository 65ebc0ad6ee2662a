//! Steady cord width from the approximate free-boundary balance.
//!
//! For a cord of half-width `w` whose cell fraction is close to `phi0`, the
//! transverse nutrient profile has the closed form
//! `c0_w(x) = cosh(s(1-x)) / cosh(s)` with `s = w sqrt(alpha phi0)`. The
//! steady width `w0` is the value at which net proliferation across the cord
//! balances,
//!
//! ```text
//! C(w) = integral_0^1 Gamma(c0_w(x)) dx = 0,
//! ```
//!
//! since the interface speed is proportional to this integral. `C(0) =
//! Gamma(1) > 0` and `C` turns negative for wide cords (the interior starves),
//! so a first root exists. For linear regulation the condition reduces to the
//! scalar equation `tanh(s) = c0 s`, which gives an independent oracle for the
//! quadrature-based solver. On top of the width, the module builds the first
//! order reconstruction `phi0 + nu phi1` of the cell profile and its relative
//! errors against the full stationary solution.

use crate::constitutive::{growth_logistic, GrowthRegulation, ModelParams};
use crate::error::{Error, Result};
use crate::grid::{Field1D, Grid1D};
use crate::linalg::{solve_two_point_bvp, Boundary};
use crate::quadrature::adaptive_simpson_with_breaks;
use crate::stationary::{fixed_point, SolverOptions};

/// Steady width and its admissibility data.
#[derive(Debug, Clone)]
pub struct WidthSolution {
    /// Steady cord half-width, the first positive root of `C(w)`.
    pub w0: f64,
    /// Root bracket used by the solver; `C` changes sign across it.
    pub bracket: (f64, f64),
    /// `beta(eps*) * w0` with `eps*` from [`ModelParams::optimal_epsilon`].
    pub beta_w0: f64,
    /// `beta_w0 < 1`, the a posteriori admissibility of the steady state.
    pub admissible: bool,
    /// Perturbation magnitude `nu = (beta2(eps*) * w0)^2`.
    pub nu: f64,
    /// Depth where `c0_w0` crosses the proliferation threshold, if it does.
    pub xbar: Option<f64>,
}

/// First-order reconstruction of the stationary profiles at width `w` and
/// its relative errors against the full solver.
#[derive(Debug, Clone)]
pub struct PerturbationCheck {
    pub w: f64,
    /// Expansion parameter `(beta2(eps*) * w)^2`.
    pub nu: f64,
    /// Normalized perturbation field.
    pub phi1: Field1D,
    pub phi_exact: Field1D,
    pub c_exact: Field1D,
    /// `phi0 + nu * phi1`.
    pub phi_approx: Field1D,
    /// Closed-form `c0_w` sampled on the grid.
    pub c_approx: Field1D,
    /// `1 - phi_approx / phi_exact` nodewise.
    pub e_phi: Field1D,
    /// `1 - c_approx / c_exact` nodewise.
    pub e_c: Field1D,
    pub e_phi_max: f64,
    pub e_c_max: f64,
}

/// Transverse decay scale `s = w sqrt(alpha phi0)` of the nutrient.
pub fn decay_scale(w: f64, p: &ModelParams) -> f64 {
    w * (p.alpha * p.phi0).sqrt()
}

/// Closed-form nutrient profile `cosh(s(1-x)) / cosh(s)` across a cord of
/// constant cell fraction `phi0`.
///
/// Computed as `exp(-sx) (1 + exp(-2s(1-x))) / (1 + exp(-2s))`, which never
/// overflows however large `w` gets. Equals 1 at the vessel wall `x = 0` and
/// decreases into the cord.
pub fn c0_profile(x: f64, w: f64, p: &ModelParams) -> f64 {
    let s = decay_scale(w, p);
    (-s * x).exp() * (1.0 + (-2.0 * s * (1.0 - x)).exp()) / (1.0 + (-2.0 * s).exp())
}

/// Depth at which `c0_w` crosses `threshold`, when the edge value has dropped
/// that far.
fn threshold_crossing(w: f64, threshold: f64, p: &ModelParams) -> Option<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return None;
    }
    let s = decay_scale(w, p);
    if s <= 0.0 {
        return None;
    }
    if s > 30.0 {
        // cosh(s) = exp(s)/2 and acosh(y) = ln(2y) to below double precision
        // here, so the crossing reduces to -ln(threshold)/s.
        return Some((-threshold.ln() / s).clamp(0.0, 1.0));
    }
    let y = threshold * s.cosh();
    if y < 1.0 {
        return None;
    }
    Some((1.0 - y.acosh() / s).clamp(0.0, 1.0))
}

/// Viable/necrotic boundary: the depth where `c0_w` falls to `c0`. Empty for
/// narrow cords whose nutrient never drops that low.
pub fn xbar_of_w(w: f64, p: &ModelParams) -> Option<f64> {
    threshold_crossing(w, p.c0, p)
}

/// Net proliferation `C(w) = integral_0^1 Gamma(c0_w(x)) dx`.
///
/// Adaptive Simpson quadrature with absolute tolerance `1e-12`; for the
/// two-threshold regulation the integrand has kinks where `c0_w` crosses the
/// thresholds, so the integration panels are split there.
pub fn net_proliferation(w: f64, p: &ModelParams) -> Result<f64> {
    p.validate()?;
    if !(w >= 0.0) {
        return Err(Error::invalid("w", format!("{w} (must be >= 0)")));
    }
    let mut breaks = Vec::new();
    if let GrowthRegulation::TwoThreshold { c1, .. } = p.regulation {
        if let Some(x) = threshold_crossing(w, p.c0, p) {
            breaks.push(x);
        }
        if let Some(x) = threshold_crossing(w, c1, p) {
            breaks.push(x);
        }
    }
    adaptive_simpson_with_breaks(
        &|x| p.regulation(c0_profile(x, w, p)),
        0.0,
        1.0,
        1e-12,
        &breaks,
    )
}

/// Finds the steady width for any admissible regulation by bracketing the
/// first sign change of `C(w)`.
///
/// Scans `w = 0.25 * 2^k` until `C` turns nonpositive (it starts from
/// `C(0) = Gamma(1) > 0`), then bisects the bracket down to a width
/// uncertainty of `1e-10`. Gives up past `w = 64` and reports the scanned
/// values.
pub fn solve_width_general(p: &ModelParams) -> Result<WidthSolution> {
    p.validate()?;
    const W_MAX: f64 = 64.0;
    let mut scanned = Vec::new();
    let mut w_lo = 0.0;
    let c0_val = net_proliferation(0.0, p)?;
    scanned.push((0.0, c0_val));
    if c0_val <= 0.0 {
        return Err(Error::domain(
            "solve_width_general",
            format!("C(0) = {c0_val} is not positive; no growth at full supply"),
        ));
    }
    let mut w_hi = 0.25;
    loop {
        let c_hi = net_proliferation(w_hi, p)?;
        scanned.push((w_hi, c_hi));
        if c_hi <= 0.0 {
            break;
        }
        w_lo = w_hi;
        w_hi *= 2.0;
        if w_hi > W_MAX {
            return Err(Error::NoRoot {
                w_max: W_MAX,
                scanned,
            });
        }
    }
    let bracket = (w_lo, w_hi);
    let (mut lo, mut hi) = bracket;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if net_proliferation(mid, p)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    finish_solution(0.5 * (lo + hi), bracket, p)
}

/// Finds the steady width for linear regulation from the scalar reduction
/// `tanh(s) = c0 s`, `s = w sqrt(alpha phi0)`.
///
/// The root is bisected inside the analytic bracket
/// `[sqrt(3(1-c0)/(alpha phi0)), 1/(c0 sqrt(alpha phi0))]`: the lower end
/// comes from the MacLaurin expansion of tanh (where the residual is still
/// positive, since `tanh s > s - s^3/3`), the upper end from `tanh s < 1`.
pub fn solve_width_linear(p: &ModelParams) -> Result<WidthSolution> {
    p.validate()?;
    if p.regulation != GrowthRegulation::Linear {
        return Err(Error::invalid(
            "regulation",
            "the scalar width reduction only holds for linear regulation".to_string(),
        ));
    }
    let scale = (p.alpha * p.phi0).sqrt();
    let s_lo = (3.0 * (1.0 - p.c0)).sqrt();
    let s_hi = 1.0 / p.c0;
    let residual = |s: f64| s.tanh() - p.c0 * s;
    let mut lo = s_lo;
    let mut hi = s_hi;
    for _ in 0..200 {
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s0 = 0.5 * (lo + hi);
    finish_solution(s0 / scale, (s_lo / scale, s_hi / scale), p)
}

fn finish_solution(w0: f64, bracket: (f64, f64), p: &ModelParams) -> Result<WidthSolution> {
    let (eps_star, beta_star) = p.optimal_epsilon()?;
    let d = ModelParams {
        epsilon: eps_star,
        ..p.clone()
    }
    .derived_constants()?;
    let beta_w0 = beta_star * w0;
    Ok(WidthSolution {
        w0,
        bracket,
        beta_w0,
        admissible: beta_w0 < 1.0,
        nu: (d.beta2 * w0).powi(2),
        xbar: xbar_of_w(w0, p),
    })
}

/// First-order perturbation of the cell profile around `phi0`: solves
/// `-(phi1)'' = g(phi0) Gamma(c0_w) / Gamma_max` with `phi1'(0) = 0`,
/// `phi1(1) = 0`.
///
/// The normalization by `Gamma_max` makes `phi1` independent of the overall
/// growth-rate scale; the reconstruction reinstates it through `nu`.
pub fn perturbation_phi1(w: f64, p: &ModelParams, grid: &Grid1D) -> Result<Field1D> {
    if !(w >= 0.0) {
        return Err(Error::invalid("w", format!("{w} (must be >= 0)")));
    }
    let d = p.derived_constants()?;
    let n = grid.n();
    let h_coef = vec![0.0; n];
    let rhs: Vec<f64> = (0..n)
        .map(|i| growth_logistic(p.phi0) * p.regulation(c0_profile(grid.x(i), w, p)) / d.gamma_max)
        .collect();
    solve_two_point_bvp(
        &h_coef,
        &rhs,
        Boundary::NeumannZero,
        Boundary::Dirichlet(0.0),
        grid,
    )
}

/// Builds `phi_approx = phi0 + nu phi1` and `c_approx = c0_w` at width `w`
/// and measures their relative errors against the stationary fixed point on
/// the same grid.
pub fn reconstruct_and_errors(
    w: f64,
    p: &ModelParams,
    grid: &Grid1D,
    opts: &SolverOptions,
) -> Result<PerturbationCheck> {
    let exact = fixed_point(w, p, grid, opts)?;
    let phi1 = perturbation_phi1(w, p, grid)?;
    let (eps_star, _) = p.optimal_epsilon()?;
    let d = ModelParams {
        epsilon: eps_star,
        ..p.clone()
    }
    .derived_constants()?;
    let nu = (d.beta2 * w).powi(2);
    let n = grid.n();
    let mut phi_approx = vec![0.0; n];
    let mut c_approx = vec![0.0; n];
    let mut e_phi = vec![0.0; n];
    let mut e_c = vec![0.0; n];
    let mut e_phi_max = 0.0f64;
    let mut e_c_max = 0.0f64;
    for i in 0..n {
        phi_approx[i] = p.phi0 + nu * phi1[i];
        c_approx[i] = c0_profile(grid.x(i), w, p);
        e_phi[i] = 1.0 - phi_approx[i] / exact.phi[i];
        e_c[i] = 1.0 - c_approx[i] / exact.c[i];
        e_phi_max = e_phi_max.max(e_phi[i].abs());
        e_c_max = e_c_max.max(e_c[i].abs());
    }
    Ok(PerturbationCheck {
        w,
        nu,
        phi1,
        phi_exact: exact.phi,
        c_exact: exact.c,
        phi_approx,
        c_approx,
        e_phi,
        e_c,
        e_phi_max,
        e_c_max,
    })
}
