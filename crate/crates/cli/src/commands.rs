//! The five subcommands and the run-directory plumbing they share.
//!
//! Every non-dry run creates the output directory, drops a
//! `resolved_config.toml` with all defaults spelled out, and writes a
//! `manifest.toml` last. The manifest is written even when the run fails, so
//! partial outputs stay accounted for and carry a FAILED marker.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use cordsim_core::csvio;
use cordsim_core::diagnostics::{compare_to_theory, measure};
use cordsim_core::evolution;
use cordsim_core::freeboundary::{
    reconstruct_and_errors, solve_width_general, solve_width_linear, WidthSolution,
};
use cordsim_core::levelset::extract_interface;
use cordsim_core::stationary::{fixed_point, verify_stationary};
use cordsim_core::{Grid1D, GrowthRegulation, ModelParams};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::CommonArgs;

/// A run directory plus the files and sweep entries written into it, tracked
/// for the manifest.
struct OutDir {
    root: PathBuf,
    files: Vec<String>,
    entries: Vec<String>,
}

impl OutDir {
    fn create(root: &Path) -> Result<OutDir, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::io(format!("cannot create {}", root.display()), e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            files: Vec::new(),
            entries: Vec::new(),
        })
    }

    /// Creates `name` under the run directory, fills it via `body`, and
    /// records it for the manifest.
    fn write_file(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.root.join(name);
        File::create(&path)
            .and_then(|f| {
                let mut w = BufWriter::new(f);
                body(&mut w)?;
                w.flush()
            })
            .map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_resolved(&mut self, resolved: &RunConfig) -> Result<(), CliError> {
        let text = toml::to_string_pretty(resolved)
            .map_err(|e| CliError::Config(format!("cannot serialize resolved config: {e}")))?;
        self.write_file("resolved_config.toml", |w| w.write_all(text.as_bytes()))
    }
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    status: String,
    config: String,
    out: String,
    jobs: usize,
    package: String,
    files: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    entries: Vec<String>,
}

/// Runs `body` inside a fresh run directory holding the resolved config, then
/// writes `manifest.toml` with status `ok` or `FAILED: reason`.
fn with_manifest(
    command: &str,
    args: &CommonArgs,
    resolved: &RunConfig,
    body: impl FnOnce(&mut OutDir) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let mut dir = OutDir::create(&args.out)?;
    dir.write_resolved(resolved)?;
    let result = body(&mut dir);
    let status = match &result {
        Ok(()) => "ok".to_string(),
        Err(e) => format!("FAILED: {e}"),
    };
    let mut files = dir.files.clone();
    files.sort();
    let manifest = Manifest {
        command: command.to_string(),
        status,
        config: args.config.display().to_string(),
        out: args.out.display().to_string(),
        jobs: args.jobs,
        package: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        files,
        entries: dir.entries,
    };
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| CliError::Config(format!("cannot serialize manifest: {e}")))?;
    let wrote = fs::write(dir.root.join("manifest.toml"), text)
        .map_err(|e| CliError::io("cannot write manifest.toml", e));
    match result {
        Ok(()) => wrote,
        // The body's failure outranks a manifest write error.
        Err(e) => Err(e),
    }
}

fn solve_width(p: &ModelParams) -> cordsim_core::Result<WidthSolution> {
    match p.regulation {
        GrowthRegulation::Linear => solve_width_linear(p),
        GrowthRegulation::TwoThreshold { .. } => solve_width_general(p),
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "VIOLATED"
    }
}

pub fn constants(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let p = cfg.model.params()?;
    let d = p.derived_constants().map_err(CliError::config)?;
    let resolved = cfg.resolved(&p)?;
    print!("{}", csvio::render_constants(&p, &d));
    if args.dry_run {
        println!(
            "dry run: would write constants.csv to {}",
            args.out.display()
        );
        return Ok(());
    }
    with_manifest("constants", args, &resolved, |dir| {
        dir.write_file("constants.csv", |w| csvio::write_constants_csv(w, &p, &d))
    })
}

pub fn stationary(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    cfg.stationary.validate()?;
    let p = cfg.model.params()?;
    let grid = Grid1D::new(cfg.stationary.n).map_err(CliError::config)?;
    let opts = cfg.stationary.solver_options();
    let w = cfg.stationary.w;
    let resolved = cfg.resolved(&p)?;
    if args.dry_run {
        println!(
            "dry run: stationary solve at w = {w}, n = {}, tol = {:e}; would write stationary.csv to {}",
            cfg.stationary.n,
            opts.tol,
            args.out.display()
        );
        return Ok(());
    }
    with_manifest("stationary", args, &resolved, |dir| {
        let sol = fixed_point(w, &p, &grid, &opts).map_err(CliError::solver)?;
        dir.write_file("stationary.csv", |out| {
            csvio::write_stationary_csv(out, &grid, &sol)
        })?;
        let checks = verify_stationary(&sol, &p, &grid).map_err(CliError::solver)?;
        println!("stationary profile at w = {w}");
        println!("  iterations          {}", sol.iterations);
        println!("  residual phi        {:.5e}", sol.residual_phi);
        println!("  residual c          {:.5e}", sol.residual_c);
        println!(
            "  |phi - phi0| bound  {:.5e}  observed {:.5e}  {}",
            checks.distance_bound,
            checks.distance_observed,
            pass(checks.distance_ok)
        );
        println!(
            "  |1 - c| bound       {:.5e}  observed {:.5e}  {}",
            checks.apriori_bound,
            checks.apriori_observed,
            pass(checks.apriori_ok)
        );
        println!("  c monotone          {}", pass(checks.c_monotone));
        println!("  in bounds           {}", pass(checks.in_bounds));
        println!("  all checks          {}", pass(checks.pass));
        Ok(())
    })
}

pub fn width(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let p = cfg.model.params()?;
    let grid = Grid1D::new(cfg.width.n).map_err(CliError::config)?;
    let opts = cfg.stationary.solver_options();
    let resolved = cfg.resolved(&p)?;
    if args.dry_run {
        println!(
            "dry run: width solve plus profile reconstruction at n = {}; would write width.csv and width_profile.csv to {}",
            cfg.width.n,
            args.out.display()
        );
        return Ok(());
    }
    with_manifest("width", args, &resolved, |dir| {
        let sol = solve_width(&p).map_err(CliError::solver)?;
        dir.write_file("width.csv", |w| csvio::write_width_csv(w, &sol))?;
        println!("equilibrium width");
        println!("  w0           {:.5e}", sol.w0);
        println!(
            "  bracket      [{:.5e}, {:.5e}]",
            sol.bracket.0, sol.bracket.1
        );
        println!("  beta * w0    {:.5e}", sol.beta_w0);
        println!("  nu           {:.5e}", sol.nu);
        match sol.xbar {
            Some(x) => println!("  xbar         {x:.5e}"),
            None => println!("  xbar         not crossed"),
        }
        if !sol.admissible {
            return Err(CliError::Solver(format!(
                "beta * w0 = {:.5e} >= 1: equilibrium width outside the admissible regime",
                sol.beta_w0
            )));
        }
        let check = reconstruct_and_errors(sol.w0, &p, &grid, &opts).map_err(CliError::solver)?;
        dir.write_file("width_profile.csv", |w| {
            csvio::write_width_profile_csv(w, &grid, &check)
        })?;
        println!("  max |E[phi]| {:.5e}", check.e_phi_max);
        println!("  max |E[c]|   {:.5e}", check.e_c_max);
        Ok(())
    })
}

pub fn evolve(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let p = cfg.model.params()?;
    let ecfg = cfg.evolve.evolution_config(p.clone())?;
    let resolved = cfg.resolved(&p)?;
    if args.dry_run {
        println!(
            "dry run: evolve on {}x{} grid over [0, {}] x [0, {}], derived dt = {:.5e}, t_end = {}, {} snapshots",
            ecfg.grid.nx(),
            ecfg.grid.nz(),
            ecfg.grid.lx(),
            ecfg.grid.lz(),
            ecfg.initial_dt(),
            ecfg.t_end,
            ecfg.snapshot_times.len()
        );
        return Ok(());
    }
    with_manifest("evolve", args, &resolved, |dir| {
        let grid = ecfg.grid;
        let eta = ecfg.indicator_halfwidth();
        let result = evolution::run(ecfg).map_err(CliError::solver)?;
        for w in &result.warnings {
            eprintln!("warning: {w}");
        }
        for snap in &result.snapshots {
            let tag = format!("{}", snap.t);
            dir.write_file(&format!("phi_t{tag}.csv"), |w| {
                csvio::write_field_csv(w, &snap.phi, &grid, snap.t)
            })?;
            dir.write_file(&format!("c_t{tag}.csv"), |w| {
                csvio::write_field_csv(w, &snap.c, &grid, snap.t)
            })?;
            dir.write_file(&format!("psi_t{tag}.csv"), |w| {
                csvio::write_field_csv(w, &snap.psi, &grid, snap.t)
            })?;
            dir.write_file(&format!("interface_t{tag}.csv"), |w| {
                csvio::write_interface_csv(w, &snap.interface)
            })?;
        }
        let fin = &result.final_state;
        dir.write_file("phi_final.csv", |w| {
            csvio::write_field_csv(w, &fin.phi, &grid, fin.t)
        })?;
        dir.write_file("c_final.csv", |w| {
            csvio::write_field_csv(w, &fin.c, &grid, fin.t)
        })?;
        dir.write_file("psi_final.csv", |w| {
            csvio::write_field_csv(w, &fin.psi, &grid, fin.t)
        })?;
        let interface = extract_interface(&fin.psi, &grid);
        dir.write_file("interface_final.csv", |w| {
            csvio::write_interface_csv(w, &interface)
        })?;
        println!("evolve finished at t = {}", fin.t);
        println!("  steps         {}", result.steps);
        println!("  rejected      {}", result.rejected_steps);
        println!("  dt final      {:.5e}", result.dt_final);
        println!("  wall seconds  {:.1}", result.wall_seconds);
        match measure(fin, &grid, None, eta, p.c0) {
            Ok(metrics) => {
                dir.write_file("metrics.csv", |w| csvio::write_metrics_csv(w, &metrics))?;
                let theory = compare_to_theory(&metrics, &p).map_err(CliError::solver)?;
                print!("{}", theory.render(&metrics));
            }
            // A cord too small or too fresh to measure is not a failed run.
            Err(e) => eprintln!("warning: no metrics: {e}"),
        }
        Ok(())
    })
}

/// One sweep entry: the parameter combination, its output subdirectory name,
/// and the validated parameters.
struct Combo {
    name: String,
    values: [f64; 5],
    params: ModelParams,
}

enum EntryOutcome {
    /// Width solved and `width.csv` written; inadmissible solutions still
    /// carry their numbers.
    Solved(WidthSolution),
    Solver(String),
    Io(String),
}

pub fn sweep(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    if args.jobs == 0 {
        return Err(CliError::Config("--jobs must be >= 1".to_string()));
    }
    let p = cfg.model.params()?;
    let lists = cfg.sweep.lists(&cfg.model)?;

    // Validate every combination before anything is written.
    let mut combos = Vec::with_capacity(lists.len());
    for (imu, &mu) in lists.mu.iter().enumerate() {
        for (iphi0, &phi0) in lists.phi0.iter().enumerate() {
            for (igamma, &gamma) in lists.gamma.iter().enumerate() {
                for (ic0, &c0) in lists.c0.iter().enumerate() {
                    for (ialpha, &alpha) in lists.alpha.iter().enumerate() {
                        let mut section = cfg.model.clone();
                        section.mu = mu;
                        section.phi0 = phi0;
                        section.gamma = gamma;
                        section.c0 = c0;
                        section.alpha = alpha;
                        combos.push(Combo {
                            name: format!("entry_{imu}_{iphi0}_{igamma}_{ic0}_{ialpha}"),
                            values: [mu, phi0, gamma, c0, alpha],
                            params: section.params()?,
                        });
                    }
                }
            }
        }
    }

    let resolved = cfg.resolved(&p)?;
    if args.dry_run {
        println!(
            "dry run: sweep over {} combinations with {} jobs; would write sweep.csv and one subdirectory per entry to {}",
            combos.len(),
            args.jobs,
            args.out.display()
        );
        return Ok(());
    }

    with_manifest("sweep", args, &resolved, |dir| {
        let outcomes = run_entries(&combos, args.jobs, &dir.root);

        dir.write_file("sweep.csv", |w| {
            writeln!(
                w,
                "mu,phi0,gamma,c0,alpha,epsilon,w0,beta_w0,admissible,nu,xbar,status"
            )?;
            for (combo, outcome) in combos.iter().zip(&outcomes) {
                writeln!(w, "{}", sweep_row(combo, outcome))?;
            }
            Ok(())
        })?;

        let mut first_io = None;
        let mut first_failed = None;
        for (combo, outcome) in combos.iter().zip(&outcomes) {
            let entry = match outcome {
                EntryOutcome::Solved(sol) if sol.admissible => {
                    dir.files.push(format!("{}/width.csv", combo.name));
                    format!("{}: ok", combo.name)
                }
                EntryOutcome::Solved(sol) => {
                    dir.files.push(format!("{}/width.csv", combo.name));
                    let reason = format!("inadmissible: beta * w0 = {:.5e} >= 1", sol.beta_w0);
                    first_failed.get_or_insert(format!("{}: {reason}", combo.name));
                    format!("{}: FAILED: {reason}", combo.name)
                }
                EntryOutcome::Solver(reason) => {
                    first_failed.get_or_insert(format!("{}: {reason}", combo.name));
                    format!("{}: FAILED: {reason}", combo.name)
                }
                EntryOutcome::Io(reason) => {
                    first_io.get_or_insert(format!("{}: {reason}", combo.name));
                    format!("{}: FAILED: {reason}", combo.name)
                }
            };
            dir.entries.push(entry);
        }

        println!(
            "sweep: {} entries, {} failed",
            combos.len(),
            dir.entries.iter().filter(|e| e.contains("FAILED")).count()
        );
        if let Some(m) = first_io {
            return Err(CliError::Io(m));
        }
        if let Some(m) = first_failed {
            return Err(CliError::Solver(m));
        }
        Ok(())
    })
}

/// Solves all entries, `jobs` at a time. Worker `k` owns indices
/// `k, k + jobs, ...`; results land in combo order so the emitted CSV does
/// not depend on the job count.
fn run_entries(combos: &[Combo], jobs: usize, root: &Path) -> Vec<EntryOutcome> {
    let jobs = jobs.min(combos.len()).max(1);
    let mut slots: Vec<Option<EntryOutcome>> = Vec::new();
    slots.resize_with(combos.len(), || None);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for k in 0..jobs {
            handles.push(scope.spawn(move || {
                let mut done = Vec::new();
                let mut idx = k;
                while idx < combos.len() {
                    done.push((idx, run_entry(&combos[idx], root)));
                    idx += jobs;
                }
                done
            }));
        }
        for h in handles {
            for (idx, outcome) in h.join().expect("sweep worker panicked") {
                slots[idx] = Some(outcome);
            }
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("sweep entry left unsolved"))
        .collect()
}

fn run_entry(combo: &Combo, root: &Path) -> EntryOutcome {
    let dir = root.join(&combo.name);
    if let Err(e) = fs::create_dir_all(&dir) {
        return EntryOutcome::Io(format!("cannot create {}: {e}", dir.display()));
    }
    let sol = match solve_width(&combo.params) {
        Ok(sol) => sol,
        Err(e) => return EntryOutcome::Solver(e.to_string()),
    };
    let path = dir.join("width.csv");
    let wrote = File::create(&path).and_then(|f| {
        let mut w = BufWriter::new(f);
        csvio::write_width_csv(&mut w, &sol)?;
        w.flush()
    });
    match wrote {
        Ok(()) => EntryOutcome::Solved(sol),
        Err(e) => EntryOutcome::Io(format!("cannot write {}: {e}", path.display())),
    }
}

fn sweep_row(combo: &Combo, outcome: &EntryOutcome) -> String {
    let g = csvio::fmt_g17;
    let [mu, phi0, gamma, c0, alpha] = combo.values;
    let head = format!(
        "{},{},{},{},{},{}",
        g(mu),
        g(phi0),
        g(gamma),
        g(c0),
        g(alpha),
        g(combo.params.epsilon)
    );
    match outcome {
        EntryOutcome::Solved(sol) => {
            let xbar = sol.xbar.map_or_else(|| "nan".to_string(), g);
            let status = if sol.admissible { "ok" } else { "inadmissible" };
            format!(
                "{head},{},{},{},{},{xbar},{status}",
                g(sol.w0),
                g(sol.beta_w0),
                sol.admissible,
                g(sol.nu)
            )
        }
        EntryOutcome::Solver(reason) | EntryOutcome::Io(reason) => {
            let clean = reason.replace(',', ";").replace('\n', " ");
            format!("{head},nan,nan,false,nan,nan,failed: {clean}")
        }
    }
}
