//! Constitutive laws of the mixture model and the constants derived from
//! them.
//!
//! The cell phase is a deformable porous medium with intercellular stress
//! `sigma(phi)` vanishing at the relaxed fraction `phi0`. The combination
//! `F(phi) = phi^mu` acts as the potential of the cell flux: the momentum
//! balance reduces the cell equation to `d phi/dt = Laplacian F(phi) + source`.
//! Growth is logistic in `phi` and regulated in the nutrient through
//! `Gamma(c)`, either linear or with a quiescent band between two thresholds.
//!
//! The derived constants bundle the Lipschitz/maximum data used by the
//! fixed-point theory: the solvers are guaranteed to converge when
//! `beta(eps) * w < 1`, where `eps` splits the margin between the two
//! contraction estimates `beta1` (increasing in `eps`) and `beta2`
//! (decreasing in `eps`). `optimal_epsilon` balances the two.

use crate::error::{Error, Result};

/// Poincare constant of the unit interval for the mixed boundary conditions
/// used here (one Dirichlet end, one Neumann end).
pub const POINCARE: f64 = 2.0 / std::f64::consts::PI;

/// Nutrient regulation `Gamma(c)` of the growth term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthRegulation {
    /// `Gamma(c) = gamma * (c - c0)`.
    Linear,
    /// Proliferation above `c0`, death below `c1`, quiescence in between:
    /// `Gamma(c) = gamma0*(c - c0)` for `c >= c0`, `0` for `c1 < c < c0`,
    /// `gamma1*(c - c1)` for `c <= c1`.
    TwoThreshold { gamma0: f64, gamma1: f64, c1: f64 },
}

/// Nondimensional model parameters.
///
/// `mu >= 1` is the stress exponent, `phi0` the relaxed cell fraction of the
/// host, `gamma` the growth-rate coefficient of the linear regulation, `c0`
/// the proliferation threshold, `alpha` the uptake rate, and `epsilon` the
/// lower cell-fraction cutoff used by the admissibility constants
/// (`0 < epsilon < phi0`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub mu: f64,
    pub phi0: f64,
    pub gamma: f64,
    pub c0: f64,
    pub alpha: f64,
    pub regulation: GrowthRegulation,
    pub epsilon: f64,
}

/// Constants derived from a parameter set at its configured `epsilon`.
#[derive(Debug, Clone, Copy)]
pub struct DerivedConstants {
    /// Maximum of the logistic growth factor, `g_max = 1/4`.
    pub g_max: f64,
    /// Lipschitz constant of the logistic growth factor on [0, 1].
    pub g_lip: f64,
    /// Maximum of `|Gamma|` over the physical nutrient range [0, 1].
    pub gamma_max: f64,
    /// Lipschitz constant of `F^{-1}` on `[F(eps), 1]`.
    pub f_inv_lip: f64,
    /// Poincare constant of the unit interval.
    pub poincare: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// `max(beta1, beta2)`; the solvers require `beta * w < 1`.
    pub beta: f64,
}

impl ModelParams {
    /// The parameter set used throughout the documentation and tests:
    /// `mu = 3`, `phi0 = 0.75`, `gamma = 0.7`, `c0 = 0.8`, `alpha = 0.5`,
    /// linear regulation, `epsilon = 0.5`.
    pub fn baseline() -> Self {
        ModelParams {
            mu: 3.0,
            phi0: 0.75,
            gamma: 0.7,
            c0: 0.8,
            alpha: 0.5,
            regulation: GrowthRegulation::Linear,
            epsilon: 0.5,
        }
    }

    /// Replaces `epsilon` by the admissibility optimum from
    /// [`ModelParams::optimal_epsilon`].
    pub fn with_optimal_epsilon(mut self) -> Result<Self> {
        let (eps, _) = self.optimal_epsilon()?;
        self.epsilon = eps;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 1.0) || !self.mu.is_finite() {
            return Err(Error::invalid("mu", format!("{} (must be >= 1)", self.mu)));
        }
        if !(self.phi0 > 0.0 && self.phi0 < 1.0) {
            return Err(Error::invalid(
                "phi0",
                format!("{} (must lie in (0, 1))", self.phi0),
            ));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid(
                "gamma",
                format!("{} (must be > 0)", self.gamma),
            ));
        }
        if !(self.c0 > 0.0 && self.c0 < 1.0) {
            return Err(Error::invalid(
                "c0",
                format!("{} (must lie in (0, 1))", self.c0),
            ));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(
                "alpha",
                format!("{} (must be > 0)", self.alpha),
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.phi0) {
            return Err(Error::invalid(
                "epsilon",
                format!("{} (must lie in (0, phi0))", self.epsilon),
            ));
        }
        if let GrowthRegulation::TwoThreshold { gamma0, gamma1, c1 } = self.regulation {
            if !(gamma0 > 0.0) || !gamma0.is_finite() {
                return Err(Error::invalid("gamma0", format!("{gamma0} (must be > 0)")));
            }
            if !(gamma1 > 0.0) || !gamma1.is_finite() {
                return Err(Error::invalid("gamma1", format!("{gamma1} (must be > 0)")));
            }
            if !(c1 > 0.0 && c1 < self.c0) {
                return Err(Error::invalid("c1", format!("{c1} (must lie in (0, c0))")));
            }
        }
        Ok(())
    }

    /// Intercellular stress `sigma(phi)`, vanishing at `phi0`.
    ///
    /// `mu = 1`: `ln(phi/phi0)/phi`; `mu > 1`:
    /// `mu/(mu-1) * (phi^(mu-1) - phi0^(mu-1)) / phi`.
    pub fn sigma(&self, phi: f64) -> Result<f64> {
        if !(phi > 0.0) {
            return Err(Error::domain("sigma", format!("phi = {phi} (must be > 0)")));
        }
        Ok(self.stress_flux_potential(phi)? / phi)
    }

    /// `phi * sigma(phi)`, the quantity whose gradient drives the cell flux.
    ///
    /// `mu = 1`: `ln(phi/phi0)`; `mu > 1`:
    /// `mu/(mu-1) * (phi^(mu-1) - phi0^(mu-1))`. Finite at `phi = 0` for
    /// `mu > 1`, singular there for `mu = 1`.
    pub fn stress_flux_potential(&self, phi: f64) -> Result<f64> {
        if phi < 0.0 {
            return Err(Error::domain(
                "stress_flux_potential",
                format!("phi = {phi} (must be >= 0)"),
            ));
        }
        // Near mu = 1 the closed form for mu > 1 cancels catastrophically;
        // the limit is the logarithmic law.
        if (self.mu - 1.0).abs() < 1e-8 {
            if phi == 0.0 {
                return Err(Error::domain(
                    "stress_flux_potential",
                    "phi = 0 is singular for mu = 1".to_string(),
                ));
            }
            Ok((phi / self.phi0).ln())
        } else {
            let e = self.mu - 1.0;
            Ok(self.mu / e * (phi.powf(e) - self.phi0.powf(e)))
        }
    }

    /// Flux potential `F(phi) = phi^mu` on [0, 1]. Satisfies
    /// `F'(phi) = phi * (phi*sigma(phi))'`.
    pub fn flux_potential(&self, phi: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&phi) {
            return Err(Error::domain(
                "flux_potential",
                format!("phi = {phi} (must lie in [0, 1])"),
            ));
        }
        Ok(phi.powf(self.mu))
    }

    /// Derivative `F'(phi) = mu * phi^(mu-1)`, the effective diffusivity of
    /// the cell equation.
    pub fn flux_potential_deriv(&self, phi: f64) -> f64 {
        self.mu * phi.powf(self.mu - 1.0)
    }

    /// Inverse flux potential `F^{-1}(u) = u^(1/mu)` on [0, 1].
    pub fn inv_flux_potential(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(
                "inv_flux_potential",
                format!("u = {u} (must lie in [0, 1])"),
            ));
        }
        Ok(u.powf(1.0 / self.mu))
    }

    /// Nutrient regulation `Gamma(c)`. Total on all of `R`, nondecreasing.
    pub fn regulation(&self, c: f64) -> f64 {
        match self.regulation {
            GrowthRegulation::Linear => self.gamma * (c - self.c0),
            GrowthRegulation::TwoThreshold { gamma0, gamma1, c1 } => {
                if c >= self.c0 {
                    gamma0 * (c - self.c0)
                } else if c > c1 {
                    0.0
                } else {
                    gamma1 * (c - c1)
                }
            }
        }
    }

    /// Lipschitz constant of `Gamma` on [0, 1].
    pub fn regulation_lipschitz(&self) -> f64 {
        match self.regulation {
            GrowthRegulation::Linear => self.gamma,
            GrowthRegulation::TwoThreshold { gamma0, gamma1, .. } => gamma0.max(gamma1),
        }
    }

    /// Derived constants at the configured `epsilon`.
    ///
    /// `beta1 = sqrt(C_P * g_max * Gamma_max / (F(phi0) - F(eps)))`,
    /// `beta2 = C_P * sqrt(L_g * Gamma_max * L_f)` with
    /// `L_f = 1/(mu * eps^(mu-1))`.
    pub fn derived_constants(&self) -> Result<DerivedConstants> {
        self.validate()?;
        let g_max = 0.25;
        let g_lip = 1.0;
        let gamma_max = match self.regulation {
            GrowthRegulation::Linear => self.gamma * self.c0.max(1.0 - self.c0),
            GrowthRegulation::TwoThreshold { gamma0, gamma1, c1 } => {
                (gamma0 * (1.0 - self.c0)).max(gamma1 * c1)
            }
        };
        let f_inv_lip = 1.0 / (self.mu * self.epsilon.powf(self.mu - 1.0));
        let gap = self.flux_potential(self.phi0)? - self.flux_potential(self.epsilon)?;
        let beta1 = (POINCARE * g_max * gamma_max / gap).sqrt();
        let beta2 = POINCARE * (g_lip * gamma_max * f_inv_lip).sqrt();
        Ok(DerivedConstants {
            g_max,
            g_lip,
            gamma_max,
            f_inv_lip,
            poincare: POINCARE,
            beta1,
            beta2,
            beta: beta1.max(beta2),
        })
    }

    /// The cutoff `eps*` minimizing `beta(eps) = max(beta1, beta2)` over
    /// `(0, phi0)`, together with `beta(eps*)`.
    ///
    /// For `mu > 1`, `beta1` increases and `beta2` decreases in `eps`, so the
    /// optimum balances the two; it is found by bisection on `beta1 - beta2`
    /// down to `|beta1 - beta2| < 1e-8`. When no sign change brackets a
    /// balance point (notably `mu = 1`, where `beta2` is constant) a grid
    /// scan over 10^4 points picks the minimizer instead.
    pub fn optimal_epsilon(&self) -> Result<(f64, f64)> {
        let betas = |eps: f64| -> Result<(f64, f64)> {
            let p = ModelParams {
                epsilon: eps,
                ..self.clone()
            };
            let d = p.derived_constants()?;
            Ok((d.beta1, d.beta2))
        };
        let mut lo = self.phi0 * 1e-9;
        let mut hi = self.phi0 * (1.0 - 1e-9);
        let (b1, b2) = betas(lo)?;
        let diff_lo = b1 - b2;
        let (b1, b2) = betas(hi)?;
        let diff_hi = b1 - b2;
        if diff_lo * diff_hi < 0.0 {
            let mut diff_at_lo = diff_lo;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let (b1, b2) = betas(mid)?;
                let d = b1 - b2;
                if d.abs() < 1e-8 || hi - lo < f64::EPSILON * self.phi0 {
                    return Ok((mid, b1.max(b2)));
                }
                if d * diff_at_lo < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    diff_at_lo = d;
                }
            }
            let mid = 0.5 * (lo + hi);
            let (b1, b2) = betas(mid)?;
            return Ok((mid, b1.max(b2)));
        }
        // No balance point: scan for the minimizer of max(beta1, beta2).
        let n = 10_000;
        let mut best = (self.phi0 * 0.5, f64::INFINITY);
        for i in 1..=n {
            let eps = self.phi0 * i as f64 / (n + 1) as f64;
            let (b1, b2) = betas(eps)?;
            let b = b1.max(b2);
            if b < best.1 {
                best = (eps, b);
            }
        }
        Ok(best)
    }
}

/// Logistic growth factor `g(phi) = phi * (1 - phi)`.
pub fn growth_logistic(phi: f64) -> f64 {
    phi * (1.0 - phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn baseline() -> ModelParams {
        ModelParams::baseline()
    }

    #[test]
    fn sigma_vanishes_at_phi0_baseline() {
        let p = baseline();
        assert_eq!(p.sigma(0.75).unwrap(), 0.0);
    }

    #[test]
    fn sigma_at_full_packing() {
        // mu/(mu-1) * (1 - phi0^(mu-1)) = 1.5 * (1 - 0.5625) = 0.65625.
        let p = baseline();
        let s = p.sigma(1.0).unwrap();
        assert!((s - 0.65625).abs() < 1e-15, "sigma(1) = {s}");
    }

    #[test]
    fn sigma_log_law_at_mu_one() {
        let p = ModelParams {
            mu: 1.0,
            ..baseline()
        };
        assert_eq!(p.sigma(0.75).unwrap(), 0.0);
        let s = p.sigma(1.0).unwrap();
        assert!((s - (1.0f64 / 0.75).ln()).abs() < 1e-15);
    }

    #[test]
    fn sigma_rejects_nonpositive_phi() {
        let p = baseline();
        assert!(p.sigma(0.0).is_err());
        assert!(p.sigma(-0.1).is_err());
    }

    #[test]
    fn flux_potential_endpoints_and_roundtrip() {
        let p = baseline();
        assert_eq!(p.flux_potential(0.0).unwrap(), 0.0);
        assert_eq!(p.flux_potential(1.0).unwrap(), 1.0);
        let u = p.flux_potential(0.75).unwrap();
        assert!((u - 0.421875).abs() < 1e-16, "F(0.75) = {u}");
        let back = p
            .inv_flux_potential(p.flux_potential(0.3).unwrap())
            .unwrap();
        assert!((back - 0.3).abs() < 1e-15);
        assert!(p.flux_potential(1.2).is_err());
        assert!(p.inv_flux_potential(-0.1).is_err());
    }

    #[test]
    fn growth_logistic_values() {
        assert_eq!(growth_logistic(0.0), 0.0);
        assert_eq!(growth_logistic(1.0), 0.0);
        assert_eq!(growth_logistic(0.5), 0.25);
    }

    #[test]
    fn regulation_linear_values() {
        let p = baseline();
        assert!(p.regulation(0.8).abs() < 1e-16);
        assert!((p.regulation(1.0) - 0.14).abs() < 1e-15);
        assert!(p.regulation(0.0) < 0.0);
    }

    #[test]
    fn regulation_two_threshold_band() {
        let p = ModelParams {
            regulation: GrowthRegulation::TwoThreshold {
                gamma0: 0.7,
                gamma1: 0.3,
                c1: 0.5,
            },
            ..baseline()
        };
        assert_eq!(p.regulation(0.65), 0.0);
        assert!((p.regulation(1.0) - 0.14).abs() < 1e-15);
        assert!((p.regulation(0.4) - 0.3 * (0.4 - 0.5)).abs() < 1e-15);
        assert!(p.regulation(0.0) < 0.0);
    }

    #[test]
    fn derived_constants_baseline() {
        let d = baseline().derived_constants().unwrap();
        assert_eq!(d.g_max, 0.25);
        assert_eq!(d.g_lip, 1.0);
        assert!((d.gamma_max - 0.56).abs() < 1e-15);
        assert!((d.f_inv_lip - 4.0 / 3.0).abs() < 1e-15);
        assert!((d.poincare - 2.0 / std::f64::consts::PI).abs() < 1e-16);
        // Direct formula evaluation at eps = 0.5.
        assert!((d.beta1 - 0.548).abs() < 1e-3, "beta1 = {}", d.beta1);
        assert!((d.beta2 - 0.550).abs() < 1e-3, "beta2 = {}", d.beta2);
        assert_eq!(d.beta, d.beta1.max(d.beta2));
    }

    #[test]
    fn derived_constants_mu_one_lipschitz() {
        let p = ModelParams {
            mu: 1.0,
            epsilon: 0.3,
            ..baseline()
        };
        let d = p.derived_constants().unwrap();
        assert_eq!(d.f_inv_lip, 1.0);
    }

    #[test]
    fn derived_constants_rejects_bad_epsilon() {
        let p = ModelParams {
            epsilon: 0.8,
            ..baseline()
        };
        assert!(p.derived_constants().is_err());
    }

    #[test]
    fn optimal_epsilon_balances_betas() {
        let p = baseline();
        let (eps, beta) = p.optimal_epsilon().unwrap();
        let d = ModelParams { epsilon: eps, ..p }
            .derived_constants()
            .unwrap();
        assert!((d.beta1 - d.beta2).abs() < 1e-8);
        assert!((beta - d.beta).abs() < 1e-12);
        assert!((eps - 0.5).abs() < 0.02, "eps* = {eps}");
    }

    #[test]
    fn optimal_epsilon_matches_grid_scan() {
        // Brute-force oracle: minimize max(beta1, beta2) on a fine grid.
        let p = baseline();
        let mut best = (0.0, f64::INFINITY);
        for i in 1..10_000 {
            let eps = p.phi0 * i as f64 / 10_000.0;
            let d = ModelParams {
                epsilon: eps,
                ..p.clone()
            }
            .derived_constants()
            .unwrap();
            if d.beta < best.1 {
                best = (eps, d.beta);
            }
        }
        let (eps, beta) = p.optimal_epsilon().unwrap();
        assert!((eps - best.0).abs() < 1e-3, "eps {eps} vs grid {}", best.0);
        // The scan samples the kink of max(beta1, beta2) to within half a
        // grid step, which moves the minimum value by O(slope * step).
        assert!(
            (beta - best.1).abs() < 5e-5,
            "beta {beta} vs grid {}",
            best.1
        );
    }

    #[test]
    fn optimal_epsilon_mu_one_sits_on_plateau() {
        // For mu = 1, beta2 does not depend on eps and dominates beta1 on a
        // whole interval, so the minimum of max(beta1, beta2) is the plateau
        // value beta2 and any point of the interval is a valid minimizer.
        let p = ModelParams {
            mu: 1.0,
            epsilon: 0.3,
            ..baseline()
        };
        let (eps, beta) = p.optimal_epsilon().unwrap();
        let d = ModelParams { epsilon: eps, ..p }
            .derived_constants()
            .unwrap();
        assert!(
            (beta - d.beta2).abs() < 1e-7,
            "beta {beta} vs beta2 {}",
            d.beta2
        );
        assert!((beta - d.beta).abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn sigma_zero_at_phi0(mu in 1.0f64..6.0, phi0 in 0.05f64..0.95) {
            let p = ModelParams { mu, phi0, epsilon: phi0 * 0.5, ..baseline() };
            let s = p.sigma(phi0).unwrap();
            prop_assert!(s.abs() < 1e-12);
        }

        #[test]
        fn flux_potential_monotone_and_inverse(
            mu in 1.0f64..6.0,
            a in 1e-3f64..1.0,
            b in 1e-3f64..1.0,
        ) {
            let p = ModelParams { mu, ..baseline() };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let flo = p.flux_potential(lo).unwrap();
            let fhi = p.flux_potential(hi).unwrap();
            prop_assert!(flo <= fhi);
            if hi - lo > 1e-12 {
                prop_assert!(fhi > flo);
            }
            let back = p.inv_flux_potential(fhi).unwrap();
            prop_assert!((back - hi).abs() < 1e-12);
        }

        #[test]
        fn inverse_flux_potential_lipschitz(
            mu in 1.0f64..6.0,
            eps in 0.05f64..0.7,
            u1 in 0.0f64..1.0,
            u2 in 0.0f64..1.0,
        ) {
            let phi0 = 0.75f64.max(eps + 0.05);
            let p = ModelParams { mu, phi0, epsilon: eps, ..baseline() };
            let d = p.derived_constants().unwrap();
            let f_eps = p.flux_potential(eps).unwrap();
            // Restrict both arguments to [F(eps), 1].
            let v1 = f_eps + u1 * (1.0 - f_eps);
            let v2 = f_eps + u2 * (1.0 - f_eps);
            let lhs = (p.inv_flux_potential(v1).unwrap() - p.inv_flux_potential(v2).unwrap()).abs();
            prop_assert!(lhs <= d.f_inv_lip * (v1 - v2).abs() + 1e-12);
        }

        #[test]
        fn regulation_nondecreasing(c1 in 0.0f64..1.0, c2 in 0.0f64..1.0, two in proptest::bool::ANY) {
            let p = if two {
                ModelParams {
                    regulation: GrowthRegulation::TwoThreshold { gamma0: 0.9, gamma1: 0.4, c1: 0.45 },
                    ..baseline()
                }
            } else {
                baseline()
            };
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            prop_assert!(p.regulation(lo) <= p.regulation(hi) + 1e-15);
            prop_assert!(p.regulation(0.0) < 0.0);
            prop_assert!(p.regulation(1.0) > 0.0);
        }

        #[test]
        fn beta1_increasing_beta2_decreasing_in_eps(
            mu in 1.5f64..5.0,
            e1 in 0.05f64..0.7,
            e2 in 0.05f64..0.7,
        ) {
            let phi0 = 0.75f64.max(e1.max(e2) + 0.05);
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let dl = ModelParams { mu, phi0, epsilon: lo, ..baseline() }.derived_constants().unwrap();
            let dh = ModelParams { mu, phi0, epsilon: hi, ..baseline() }.derived_constants().unwrap();
            prop_assert!(dl.beta1 <= dh.beta1 + 1e-12);
            prop_assert!(dl.beta2 >= dh.beta2 - 1e-12);
        }
    }
}
