//! CSV and table serialization of solver outputs.
//!
//! Every floating-point CSV cell is written with 17 significant digits, so
//! parsing the text back yields the identical f64 bit pattern and repeated
//! runs produce byte-identical files. Human-readable tables round to five
//! digits and are never meant to be parsed.

use std::io::{self, Write};

use crate::constitutive::{DerivedConstants, ModelParams};
use crate::diagnostics::CordMetrics;
use crate::freeboundary::{PerturbationCheck, WidthSolution};
use crate::grid::{Field2D, Grid1D, Grid2D};
use crate::stationary::StationarySolution;

/// Shortest text that round-trips an f64 exactly: one leading digit plus 16
/// decimals in scientific notation.
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt17(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), fmt_g17)
}

/// `name,value` table of a parameter set and its derived constants.
pub fn write_constants_csv<W: Write>(
    out: &mut W,
    p: &ModelParams,
    d: &DerivedConstants,
) -> io::Result<()> {
    writeln!(out, "name,value")?;
    for (name, v) in [
        ("mu", p.mu),
        ("phi0", p.phi0),
        ("gamma", p.gamma),
        ("c0", p.c0),
        ("alpha", p.alpha),
        ("epsilon", p.epsilon),
        ("g_max", d.g_max),
        ("g_lip", d.g_lip),
        ("gamma_max", d.gamma_max),
        ("f_inv_lip", d.f_inv_lip),
        ("poincare", d.poincare),
        ("beta1", d.beta1),
        ("beta2", d.beta2),
        ("beta", d.beta),
    ] {
        writeln!(out, "{name},{}", fmt_g17(v))?;
    }
    Ok(())
}

/// Five-digit table of the same constants for terminal output.
pub fn render_constants(p: &ModelParams, d: &DerivedConstants) -> String {
    let mut s = String::from("derived constants\n");
    for (name, v) in [
        ("mu", p.mu),
        ("phi0", p.phi0),
        ("gamma", p.gamma),
        ("c0", p.c0),
        ("alpha", p.alpha),
        ("epsilon", p.epsilon),
        ("g_max", d.g_max),
        ("g_lip", d.g_lip),
        ("gamma_max", d.gamma_max),
        ("f_inv_lip", d.f_inv_lip),
        ("poincare", d.poincare),
        ("beta1", d.beta1),
        ("beta2", d.beta2),
        ("beta", d.beta),
    ] {
        s.push_str(&format!("  {name:<10} {v:.5e}\n"));
    }
    s
}

/// Transverse stationary profiles: `x,phi,c`.
pub fn write_stationary_csv<W: Write>(
    out: &mut W,
    grid: &Grid1D,
    sol: &StationarySolution,
) -> io::Result<()> {
    writeln!(out, "x,phi,c")?;
    for i in 0..grid.n() {
        writeln!(
            out,
            "{},{},{}",
            fmt_g17(grid.x(i)),
            fmt_g17(sol.phi[i]),
            fmt_g17(sol.c[i])
        )?;
    }
    Ok(())
}

/// One-row summary of a width solution.
pub fn write_width_csv<W: Write>(out: &mut W, sol: &WidthSolution) -> io::Result<()> {
    writeln!(out, "w0,bracket_lo,bracket_hi,beta_w0,admissible,nu,xbar")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        fmt_g17(sol.w0),
        fmt_g17(sol.bracket.0),
        fmt_g17(sol.bracket.1),
        fmt_g17(sol.beta_w0),
        sol.admissible,
        fmt_g17(sol.nu),
        opt17(sol.xbar),
    )
}

/// Perturbation reconstruction profiles: `x,c0,phi1,phi_approx,E_phi,E_c`.
pub fn write_width_profile_csv<W: Write>(
    out: &mut W,
    grid: &Grid1D,
    check: &PerturbationCheck,
) -> io::Result<()> {
    writeln!(out, "x,c0,phi1,phi_approx,E_phi,E_c")?;
    for i in 0..grid.n() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_g17(grid.x(i)),
            fmt_g17(check.c_approx[i]),
            fmt_g17(check.phi1[i]),
            fmt_g17(check.phi_approx[i]),
            fmt_g17(check.e_phi[i]),
            fmt_g17(check.e_c[i])
        )?;
    }
    Ok(())
}

/// Row-major dump of one 2D field. The first two lines carry the grid and
/// time metadata, then one line per grid row (constant z).
pub fn write_field_csv<W: Write>(
    out: &mut W,
    field: &Field2D,
    grid: &Grid2D,
    t: f64,
) -> io::Result<()> {
    writeln!(out, "nx,nz,hx,hz,t")?;
    writeln!(
        out,
        "{},{},{},{},{}",
        grid.nx(),
        grid.nz(),
        fmt_g17(grid.hx()),
        fmt_g17(grid.hz()),
        fmt_g17(t)
    )?;
    let vals = field.as_slice();
    let nx = grid.nx();
    for j in 0..grid.nz() {
        let row = &vals[j * nx..(j + 1) * nx];
        let mut line = String::with_capacity(nx * 24);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&fmt_g17(*v));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Interface polylines as `x,z` pairs; polylines are separated by a blank
/// line.
pub fn write_interface_csv<W: Write>(out: &mut W, polylines: &[Vec<(f64, f64)>]) -> io::Result<()> {
    writeln!(out, "x,z")?;
    for (n, poly) in polylines.iter().enumerate() {
        if n > 0 {
            writeln!(out)?;
        }
        for &(x, z) in poly {
            writeln!(out, "{},{}", fmt_g17(x), fmt_g17(z))?;
        }
    }
    Ok(())
}

/// One-row summary of cord measurements.
pub fn write_metrics_csv<W: Write>(out: &mut W, m: &CordMetrics) -> io::Result<()> {
    writeln!(
        out,
        "head_position,tail_width,window_lo,window_hi,xbar_measured,viable_fraction,regions"
    )?;
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        fmt_g17(m.head_position),
        fmt_g17(m.tail_width),
        fmt_g17(m.window.0),
        fmt_g17(m.window.1),
        opt17(m.xbar_measured),
        fmt_g17(m.viable_fraction),
        m.regions
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_round_trips_bit_patterns() {
        for v in [
            0.1,
            1.0 / 3.0,
            0.75,
            1e-300,
            -2.5e17,
            std::f64::consts::PI,
            1.450_111_234_567_89,
        ] {
            let text = fmt_g17(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {text} -> {back}");
        }
    }

    #[test]
    fn field_csv_has_header_and_all_rows() {
        let g = Grid2D::new(16, 20, 1.0, 2.0).unwrap();
        let f = Field2D::from_fn(&g, |x, z| x + z);
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &f, &g, 3.5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2 + 20);
        assert_eq!(lines[0], "nx,nz,hx,hz,t");
        assert!(lines[1].starts_with("16,20,"));
        assert_eq!(lines[2].split(',').count(), 16);
        let first: f64 = lines[2].split(',').next().unwrap().parse().unwrap();
        assert_eq!(first, 0.0);
    }

    #[test]
    fn interface_csv_separates_polylines() {
        let polys = vec![
            vec![(0.0, 0.5), (0.1, 0.4)],
            vec![(1.0, 1.0), (1.1, 1.2), (1.2, 1.4)],
        ];
        let mut buf = Vec::new();
        write_interface_csv(&mut buf, &polys).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 + 1 + 3);
        assert!(text.contains("\n\n"), "blank separator expected");
    }

    #[test]
    fn writers_are_deterministic() {
        let p = ModelParams::baseline();
        let d = p.derived_constants().unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_constants_csv(&mut a, &p, &d).unwrap();
        write_constants_csv(&mut b, &p, &d).unwrap();
        assert_eq!(a, b);
        assert!(String::from_utf8(a).unwrap().contains("beta,"));
    }
}
