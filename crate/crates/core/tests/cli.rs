use std::path::Path;
use std::process::{Command, Output};

use tqm::io::read_rows;
use tqm::report::RunReport;

fn tqm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tqm")).args(args).current_dir(dir).env("TQM_THREADS", "2").output().unwrap()
}

fn write_cfg(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_rows(path).unwrap();
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k]).collect()
}

fn mass(path: &Path, name: &str, step: f64) -> f64 {
    column(path, name).iter().sum::<f64>() * step
}

const SMALL: &str = "energy.eps_max=20\nenergy.n=1024\ntime.tau_min=-40\ntime.tau_max=40\ntime.m=2048\n";

#[test]
fn density_csv_reproduces_reported_mass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL);
    let out = tqm(&["density", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = RunReport::read(&dir.path().join("o/report.json")).unwrap();
    let csv = dir.path().join("o/density.csv");
    let (header, _) = read_rows(&csv).unwrap();
    assert_eq!(header, ["tau", "p_ideal"]);
    assert!((mass(&csv, "p_ideal", 80.0 / 2048.0) - r.values["mass"]).abs() < 1e-12);
}

#[test]
fn clock_density_reproduces_both_masses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), &format!("{SMALL}clock.kind=b\nclock.lambda=0.5\nclock.e=2\n"));
    let out = tqm(&["clock", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = RunReport::read(&dir.path().join("o/report.json")).unwrap();
    let csv = dir.path().join("o/density.csv");
    let step = 80.0 / 2048.0;
    assert!((mass(&csv, "p_real", step) - r.values["mass_real"]).abs() < 1e-12);
    assert!((mass(&csv, "p_ideal", step) - r.values["mass_ideal"]).abs() < 1e-12);
}

#[test]
fn posterior_is_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL);
    let out = tqm(&["clock", "--config", &cfg, "--tau", "0.5", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = dir.path().join("o/posterior.csv");
    let (header, rows) = read_rows(&csv).unwrap();
    assert_eq!(header, ["eps", "re", "im"]);
    let d = rows[1][0] - rows[0][0];
    let norm: f64 = rows.iter().map(|r| r[1] * r[1] + r[2] * r[2]).sum::<f64>() * d;
    assert!((norm - 1.0).abs() < 1e-9, "{norm}");
}

#[test]
fn samples_are_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL);
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_tqm"))
            .args(["clock", "--config", &cfg, "--samples", "20000", "--seed", "11", "--out", out])
            .current_dir(dir.path())
            .env("TQM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(dir.path().join(out).join("samples.csv")).unwrap()
    };
    let a = run("1", "a");
    assert_eq!(a, run("3", "b"));
    assert!(String::from_utf8(a).unwrap().starts_with("idx,tau\n"));
}

#[test]
fn nogo_and_sweep_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = tqm(&["nogo", "--lambdas", "1,0.1", "--out", "n"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let tv = column(&dir.path().join("n/nogo.csv"), "tv_distance");
    assert!((tv[0] - 0.2163).abs() < 0.002 && tv[1] < tv[0]);

    let out = tqm(&["sweep", "--param", "lambda", "--values", "1,0.5", "--metric", "fwhm", "--out", "s"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_rows(&dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(header, ["value", "metric"]);
    assert!((rows[0][1] - 2.0).abs() < 1e-6 && (rows[1][1] - 1.0).abs() < 1e-6);
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tqm(&["bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(tqm(&["density", "--config", "missing.cfg"], dir.path()).status.code(), Some(2));
    let cfg = write_cfg(dir.path(), "clock.lambda=-1\n");
    assert_eq!(tqm(&["density", "--config", &cfg], dir.path()).status.code(), Some(2));
    assert_eq!(tqm(&["nogo", "--lambdas", "0.1,1"], dir.path()).status.code(), Some(2));
    let bad = Command::new(env!("CARGO_BIN_EXE_tqm"))
        .args(["density", "--out", "x"])
        .current_dir(dir.path())
        .env("TQM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn failed_verify_exits_1_with_report() {
    let dir = tempfile::tempdir().unwrap();
    // A cutoff this low leaves visible exp(1) tail mass above the grid.
    let cfg = write_cfg(dir.path(), "energy.eps_max=5\n");
    let out = tqm(&["verify", "--config", &cfg, "--out", "v"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let r = RunReport::read(&dir.path().join("v/report.json")).unwrap();
    assert!(!r.all_pass());
    assert!(r.failures().any(|c| c.name == "state.tail_mass"));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL state.tail_mass"));
}
