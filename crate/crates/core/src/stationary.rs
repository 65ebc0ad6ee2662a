//! Transverse stationary profiles of a cord of half-width `w`.
//!
//! After rescaling the cord cross-section to the unit interval, the
//! stationary problem reads
//!
//! ```text
//! -(F(phi))'' = w^2 g(phi) Gamma(c),   phi'(0) = 0,  phi(1) = phi0,
//! -c'' + alpha w^2 phi c = 0,          c(0) = 1,     c'(1) = 0,
//! ```
//!
//! with `x = 0` at the vessel wall and `x = 1` at the cord boundary. The
//! solver composes two maps: `solve_nutrient` (phi -> c) and `solve_cell`
//! (c -> phi, a damped Picard iteration on `u = F(phi) - F(phi0)`), and
//! iterates the composition from the constant state `phi = phi0` until the
//! sup-norm update drops below tolerance. Convergence is guaranteed for
//! `beta * w < 1`, which the solvers enforce.

use crate::constitutive::{growth_logistic, ModelParams};
use crate::error::{Error, Result};
use crate::grid::{Field1D, Grid1D};
use crate::linalg::{solve_two_point_bvp, Boundary};

/// Iteration controls for the stationary solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Sup-norm tolerance on the outer fixed-point update.
    pub tol: f64,
    /// Outer iteration budget.
    pub max_iters: usize,
    /// Initial damping factor of both iteration levels (1 = undamped).
    /// Halved automatically whenever the update norm grows.
    pub damping: f64,
    /// Sup-norm tolerance of the inner Picard iteration of `solve_cell`.
    pub picard_tol: f64,
    /// Inner iteration budget.
    pub picard_max: usize,
    /// Acceptance bound on the final discrete PDE residuals.
    pub residual_bound: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iters: 500,
            damping: 1.0,
            picard_tol: 1e-12,
            picard_max: 400,
            residual_bound: 1e-8,
        }
    }
}

/// A converged stationary profile.
#[derive(Debug, Clone)]
pub struct StationarySolution {
    pub w: f64,
    pub phi: Field1D,
    pub c: Field1D,
    /// Outer fixed-point iterations used.
    pub iterations: usize,
    /// Sup-norm residual of the discrete cell equation.
    pub residual_phi: f64,
    /// Sup-norm residual of the discrete nutrient equation.
    pub residual_c: f64,
    /// Whether `beta * w < 1` held (always true for a returned solution).
    pub admissible: bool,
}

/// Outcome of checking a solution against the theory.
#[derive(Debug, Clone, Copy)]
pub struct StationaryChecks {
    /// `g_max/(L_g C_P) * (beta2 w)^2`, the a priori bound on
    /// `||phi - phi0||_inf`.
    pub distance_bound: f64,
    pub distance_observed: f64,
    pub distance_ok: bool,
    /// `alpha w^2 ||phi||_L2`, the a priori bound on `||1 - c||_inf`.
    pub apriori_bound: f64,
    pub apriori_observed: f64,
    pub apriori_ok: bool,
    /// `c` nonincreasing away from the vessel.
    pub c_monotone: bool,
    /// `eps <= phi <= 1` and `0 <= c <= 1` nodewise.
    pub in_bounds: bool,
    pub pass: bool,
}

/// Solves the nutrient equation for a frozen cell profile.
pub fn solve_nutrient(phi: &[f64], w: f64, p: &ModelParams, grid: &Grid1D) -> Result<Field1D> {
    if phi.len() != grid.n() {
        return Err(Error::invalid("phi", "length does not match grid"));
    }
    if !(w >= 0.0) {
        return Err(Error::invalid("w", format!("{w} (must be >= 0)")));
    }
    for (i, &v) in phi.iter().enumerate() {
        if !(-1e-9..=1.0 + 1e-9).contains(&v) {
            return Err(Error::domain(
                "solve_nutrient",
                format!("phi[{i}] = {v} outside [0, 1]"),
            ));
        }
    }
    let aw2 = p.alpha * w * w;
    let h_coef: Vec<f64> = phi.iter().map(|&v| aw2 * v.max(0.0)).collect();
    let k = vec![0.0; grid.n()];
    solve_two_point_bvp(
        &h_coef,
        &k,
        Boundary::Dirichlet(1.0),
        Boundary::NeumannZero,
        grid,
    )
}

/// Solves the cell equation for a frozen nutrient profile by damped Picard
/// iteration on `u = F(phi) - F(phi0)`.
pub fn solve_cell(
    sigma: &[f64],
    w: f64,
    p: &ModelParams,
    grid: &Grid1D,
    opts: &SolverOptions,
) -> Result<Field1D> {
    if sigma.len() != grid.n() {
        return Err(Error::invalid("sigma", "length does not match grid"));
    }
    let d = p.derived_constants()?;
    if d.beta * w >= 1.0 {
        return Err(Error::Inadmissible { beta_w: d.beta * w });
    }
    let n = grid.n();
    let u0 = p.flux_potential(p.phi0)?;
    let gamma_of: Vec<f64> = sigma.iter().map(|&s| p.regulation(s)).collect();
    let zeros = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut omega = opts.damping.clamp(1e-3, 1.0);
    let mut prev_update = f64::INFINITY;
    let mut converged = false;
    for _ in 0..opts.picard_max {
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                // Evaluate g through the clamped inverse potential; outside
                // [0, 1] the growth factor vanishes anyway, so clamping only
                // guards transient iterates.
                let v = (u[i] + u0).clamp(0.0, 1.0);
                let phi = v.powf(1.0 / p.mu);
                w * w * growth_logistic(phi) * gamma_of[i]
            })
            .collect();
        let u_new = solve_two_point_bvp(
            &zeros,
            &rhs,
            Boundary::NeumannZero,
            Boundary::Dirichlet(0.0),
            grid,
        )?;
        let update = max_abs_diff(&u_new, &u);
        if update < opts.picard_tol {
            u = u_new;
            converged = true;
            break;
        }
        if update > prev_update {
            omega = (0.5 * omega).max(1e-3);
        }
        prev_update = update;
        if omega == 1.0 {
            u = u_new;
        } else {
            for i in 0..n {
                u[i] += omega * (u_new[i] - u[i]);
            }
        }
    }
    let phi = recover_phi(&u, u0, p)?;
    if !converged {
        return Err(Error::NoConvergence {
            iterations: opts.picard_max,
            residual: prev_update,
            last: phi,
        });
    }
    Ok(phi)
}

fn recover_phi(u: &[f64], u0: f64, p: &ModelParams) -> Result<Field1D> {
    u.iter()
        .map(|&ui| {
            let v = ui + u0;
            if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                return Err(Error::domain(
                    "solve_cell",
                    format!("F(phi) = {v} escaped [0, 1]"),
                ));
            }
            // Where the source vanished identically the solve returns u = 0
            // exactly; skip the powf round trip so phi == phi0 bitwise.
            if ui == 0.0 {
                Ok(p.phi0)
            } else {
                p.inv_flux_potential(v.clamp(0.0, 1.0))
            }
        })
        .collect()
}

/// Runs the full fixed-point iteration from `phi = phi0`.
pub fn fixed_point(
    w: f64,
    p: &ModelParams,
    grid: &Grid1D,
    opts: &SolverOptions,
) -> Result<StationarySolution> {
    let d = p.derived_constants()?;
    if d.beta * w >= 1.0 {
        return Err(Error::Inadmissible { beta_w: d.beta * w });
    }
    let n = grid.n();
    let mut phi = vec![p.phi0; n];
    let mut omega = opts.damping.clamp(1e-3, 1.0);
    let mut prev_update = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        iterations += 1;
        let c = solve_nutrient(&phi, w, p, grid)?;
        let phi_new = solve_cell(&c, w, p, grid, opts)?;
        let update = max_abs_diff(&phi_new, &phi);
        if update < opts.tol {
            phi = phi_new;
            converged = true;
            break;
        }
        if update > prev_update {
            omega = (0.5 * omega).max(1e-3);
        }
        prev_update = update;
        if omega == 1.0 {
            phi = phi_new;
        } else {
            for i in 0..n {
                phi[i] += omega * (phi_new[i] - phi[i]);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations,
            residual: prev_update,
            last: phi,
        });
    }
    let c = solve_nutrient(&phi, w, p, grid)?;
    let (residual_phi, residual_c) = residuals(&phi, &c, w, p, grid)?;
    if residual_phi > opts.residual_bound || residual_c > opts.residual_bound {
        return Err(Error::NoConvergence {
            iterations,
            residual: residual_phi.max(residual_c),
            last: phi,
        });
    }
    Ok(StationarySolution {
        w,
        phi,
        c,
        iterations,
        residual_phi,
        residual_c,
        admissible: true,
    })
}

/// Applies one sweep of the composed map `phi -> A2(A1(phi))` without
/// touching the iteration history. Used by contraction measurements.
pub fn apply_map(
    phi: &[f64],
    w: f64,
    p: &ModelParams,
    grid: &Grid1D,
    opts: &SolverOptions,
) -> Result<Field1D> {
    let c = solve_nutrient(phi, w, p, grid)?;
    solve_cell(&c, w, p, grid, opts)
}

/// Sup-norm residuals of the discrete equations, using the same stencils as
/// the solvers (mirror ghosts at the Neumann ends).
fn residuals(phi: &[f64], c: &[f64], w: f64, p: &ModelParams, grid: &Grid1D) -> Result<(f64, f64)> {
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let aw2 = p.alpha * w * w;
    let big_f: Vec<f64> = phi
        .iter()
        .map(|&v| p.flux_potential(v.clamp(0.0, 1.0)))
        .collect::<Result<_>>()?;
    let mut res_phi: f64 = 0.0;
    let mut res_c: f64 = 0.0;
    for i in 0..n {
        // Cell equation: Neumann ghost at i = 0, Dirichlet at i = n-1.
        if i == 0 {
            let lap = 2.0 * (big_f[1] - big_f[0]) * inv_h2;
            let src = w * w * growth_logistic(phi[0]) * p.regulation(c[0]);
            res_phi = res_phi.max((lap + src).abs());
        } else if i < n - 1 {
            let lap = (big_f[i - 1] - 2.0 * big_f[i] + big_f[i + 1]) * inv_h2;
            let src = w * w * growth_logistic(phi[i]) * p.regulation(c[i]);
            res_phi = res_phi.max((lap + src).abs());
        } else {
            res_phi = res_phi.max((phi[i] - p.phi0).abs());
        }
        // Nutrient equation: Dirichlet at i = 0, Neumann ghost at i = n-1.
        if i == 0 {
            res_c = res_c.max((c[0] - 1.0).abs());
        } else if i < n - 1 {
            let lap = (c[i - 1] - 2.0 * c[i] + c[i + 1]) * inv_h2;
            res_c = res_c.max((-lap + aw2 * phi[i] * c[i]).abs());
        } else {
            let lap = 2.0 * (c[n - 2] - c[n - 1]) * inv_h2;
            res_c = res_c.max((-lap + aw2 * phi[i] * c[i]).abs());
        }
    }
    Ok((res_phi, res_c))
}

/// Checks a solution against every a priori property the theory provides.
pub fn verify_stationary(
    sol: &StationarySolution,
    p: &ModelParams,
    grid: &Grid1D,
) -> Result<StationaryChecks> {
    let d = p.derived_constants()?;
    let w = sol.w;
    let distance_bound = d.g_max / (d.g_lip * d.poincare) * (d.beta2 * w).powi(2);
    let distance_observed = sol
        .phi
        .iter()
        .map(|&v| (v - p.phi0).abs())
        .fold(0.0f64, f64::max);
    let apriori_bound = p.alpha * w * w * grid.l2_norm(&sol.phi);
    let apriori_observed = sol
        .c
        .iter()
        .map(|&v| (1.0 - v).abs())
        .fold(0.0f64, f64::max);
    let slack = 1e-12;
    let c_monotone = sol.c.windows(2).all(|q| q[1] <= q[0] + slack);
    let in_bounds = sol
        .phi
        .iter()
        .all(|&v| v >= p.epsilon - slack && v <= 1.0 + slack)
        && sol.c.iter().all(|&v| (-slack..=1.0 + slack).contains(&v));
    let distance_ok = distance_observed <= distance_bound + slack;
    let apriori_ok = apriori_observed <= apriori_bound + slack;
    Ok(StationaryChecks {
        distance_bound,
        distance_observed,
        distance_ok,
        apriori_bound,
        apriori_observed,
        apriori_ok,
        c_monotone,
        in_bounds,
        pass: distance_ok && apriori_ok && c_monotone && in_bounds,
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max)
}
