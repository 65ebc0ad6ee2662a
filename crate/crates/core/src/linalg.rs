//! Tridiagonal solves and the second-order two-point boundary value solver
//! shared by the 1D machinery.

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Boundary condition of the two-point solver at one end of the interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Dirichlet(f64),
    /// Homogeneous Neumann, closed with a mirror ghost node (second order).
    NeumannZero,
}

/// Thomas algorithm. `sub[i]` couples row `i` to `i-1` (`sub[0]` ignored),
/// `sup[i]` couples row `i` to `i+1` (`sup[n-1]` ignored).
///
/// No pivoting: callers must supply diagonally dominant systems, which all
/// discretizations in this crate produce.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut x = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    solve_tridiagonal_into(sub, diag, sup, rhs, &mut x, &mut scratch)?;
    Ok(x)
}

/// Allocation-free Thomas solve for hot loops. `scratch` must have the same
/// length as `diag`.
pub fn solve_tridiagonal_into(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
    x: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    assert!(
        sub.len() == n && sup.len() == n && rhs.len() == n && x.len() == n && scratch.len() == n,
        "tridiagonal solve: inconsistent lengths"
    );
    if n == 0 {
        return Ok(());
    }
    let mut piv = diag[0];
    if piv.abs() < 1e-300 {
        return Err(Error::LinearSolve("zero pivot in row 0".into()));
    }
    scratch[0] = sup[0] / piv;
    x[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i] * scratch[i - 1];
        if piv.abs() < 1e-300 {
            return Err(Error::LinearSolve(format!("zero pivot in row {i}")));
        }
        scratch[i] = sup[i] / piv;
        x[i] = (rhs[i] - sub[i] * x[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        x[i] -= scratch[i] * x[i + 1];
    }
    Ok(())
}

/// Solves `-u'' + h(x) u = k(x)` on [0, 1] with one boundary condition per
/// end, using central differences and mirror-ghost Neumann closures (both
/// second order). Requires `h >= 0` pointwise for the discrete maximum
/// principle; this is asserted.
pub fn solve_two_point_bvp(
    h_coef: &[f64],
    k_rhs: &[f64],
    left: Boundary,
    right: Boundary,
    grid: &Grid1D,
) -> Result<Vec<f64>> {
    let n = grid.n();
    assert_eq!(h_coef.len(), n);
    assert_eq!(k_rhs.len(), n);
    assert!(
        h_coef.iter().all(|&v| v >= 0.0),
        "reaction coefficient must be nonnegative"
    );
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let mut sub = vec![-inv_h2; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![-inv_h2; n];
    let mut rhs = k_rhs.to_vec();
    for i in 0..n {
        diag[i] = 2.0 * inv_h2 + h_coef[i];
    }
    match left {
        Boundary::Dirichlet(v) => {
            diag[0] = 1.0;
            sup[0] = 0.0;
            rhs[0] = v;
        }
        Boundary::NeumannZero => {
            sup[0] = -2.0 * inv_h2;
        }
    }
    match right {
        Boundary::Dirichlet(v) => {
            diag[n - 1] = 1.0;
            sub[n - 1] = 0.0;
            rhs[n - 1] = v;
        }
        Boundary::NeumannZero => {
            sub[n - 1] = -2.0 * inv_h2;
        }
    }
    solve_tridiagonal(&sub, &diag, &sup, &rhs)
}
