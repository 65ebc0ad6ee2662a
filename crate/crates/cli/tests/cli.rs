//! End-to-end tests of the compiled binary: exit codes, emitted files, and
//! byte-level determinism of the CSV outputs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cordsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cordsim"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should run")
}

fn write_config(dir: &Path, body: &str) {
    fs::write(dir.join("run.toml"), body).unwrap();
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn constants_writes_csv_manifest_and_prints_table() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "");
    let out = cordsim(
        tmp.path(),
        &["constants", "--config", "run.toml", "--out", "run"],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("beta"));

    let run = tmp.path().join("run");
    for name in ["constants.csv", "resolved_config.toml", "manifest.toml"] {
        assert!(run.join(name).is_file(), "{name} missing");
    }
    let manifest = fs::read_to_string(run.join("manifest.toml")).unwrap();
    assert!(manifest.contains("status = \"ok\""));

    let csv = fs::read_to_string(run.join("constants.csv")).unwrap();
    let beta: f64 = csv
        .lines()
        .find_map(|l| l.strip_prefix("beta,"))
        .expect("beta row")
        .parse()
        .unwrap();
    assert!((beta - 0.5488).abs() < 1e-3, "beta = {beta}");
}

#[test]
fn identical_configs_give_byte_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "[width]\nn = 301\n");
    for dir in ["a", "b"] {
        let out = cordsim(tmp.path(), &["width", "--config", "run.toml", "--out", dir]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    }
    for name in ["width.csv", "width_profile.csv"] {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn unknown_config_key_exits_2_naming_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "bogus_key = 1\n");
    let out = cordsim(
        tmp.path(),
        &["constants", "--config", "run.toml", "--out", "run"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus_key"));
}

#[test]
fn missing_config_file_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cordsim(
        tmp.path(),
        &["constants", "--config", "nope.toml", "--out", "run"],
    );
    assert_eq!(out.status.code(), Some(4), "stderr: {}", stderr(&out));
}

#[test]
fn out_of_range_phi0_exits_2_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "[model]\nphi0 = 1.5\n");
    let out = cordsim(
        tmp.path(),
        &["constants", "--config", "run.toml", "--out", "run"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("phi0"), "stderr: {}", stderr(&out));
}

#[test]
fn inadmissible_width_exits_3_keeping_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "[model]\ngamma = 10.0\n");
    let out = cordsim(
        tmp.path(),
        &["width", "--config", "run.toml", "--out", "run"],
    );
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));

    let run = tmp.path().join("run");
    assert!(run.join("width.csv").is_file(), "partial output dropped");
    let manifest = fs::read_to_string(run.join("manifest.toml")).unwrap();
    assert!(manifest.contains("FAILED"));
}

#[test]
fn evolve_dry_run_prints_dt_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "");
    let out = cordsim(
        tmp.path(),
        &[
            "evolve",
            "--config",
            "run.toml",
            "--out",
            "run",
            "--dry-run",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("dt"));
    assert!(!tmp.path().join("run").exists(), "dry run created files");
}

#[test]
fn sweep_is_monotone_in_c0_and_independent_of_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "[sweep]\nc0 = [0.7, 0.8, 0.9]\n");
    let out = cordsim(
        tmp.path(),
        &[
            "sweep", "--config", "run.toml", "--out", "par", "--jobs", "2",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let csv = fs::read_to_string(tmp.path().join("par/sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let w0: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').nth(6).unwrap().parse().unwrap())
        .collect();
    assert!(
        w0[0] > w0[1] && w0[1] > w0[2],
        "w0 not strictly decreasing in c0: {w0:?}"
    );
    for i in 0..3 {
        let entry = tmp.path().join(format!("par/entry_0_0_0_{i}_0/width.csv"));
        assert!(entry.is_file(), "missing {}", entry.display());
    }

    let out = cordsim(
        tmp.path(),
        &[
            "sweep", "--config", "run.toml", "--out", "seq", "--jobs", "1",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let seq = fs::read(tmp.path().join("seq/sweep.csv")).unwrap();
    let par = fs::read(tmp.path().join("par/sweep.csv")).unwrap();
    assert_eq!(seq, par, "sweep.csv depends on --jobs");
}

#[test]
fn small_evolve_writes_snapshots_finals_and_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "[evolve]\nnx = 24\nnz = 48\nlx = 2.5\nlz = 4.0\nt_end = 3.0\nsnapshots = [1.5]\nr0 = 0.5\n",
    );
    let out = cordsim(
        tmp.path(),
        &["evolve", "--config", "run.toml", "--out", "run"],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let run = tmp.path().join("run");
    for name in [
        "phi_t1.5.csv",
        "c_t1.5.csv",
        "psi_t1.5.csv",
        "interface_t1.5.csv",
        "phi_final.csv",
        "interface_final.csv",
        "metrics.csv",
    ] {
        assert!(run.join(name).is_file(), "{name} missing");
    }
    let phi = fs::read_to_string(run.join("phi_final.csv")).unwrap();
    let mut lines = phi.lines();
    assert_eq!(lines.next(), Some("nx,nz,hx,hz,t"));
    assert!(lines.next().unwrap().starts_with("24,48,"));
}

#[test]
fn stationary_writes_full_profile_and_reports_iterations() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "[stationary]\nw = 1.2\nn = 101\n");
    let out = cordsim(
        tmp.path(),
        &["stationary", "--config", "run.toml", "--out", "run"],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("iterations"));

    let csv = fs::read_to_string(tmp.path().join("run/stationary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 101);
}
