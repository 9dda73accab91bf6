#![cfg(feature = "cli")]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectral-count")).args(args).output().unwrap()
}

fn run_config(mode: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![mode, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn verify_scalar_succeeds_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config("verify", &example("scalar.json"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let roots = std::fs::read_to_string(tmp.path().join("roots.csv")).unwrap();
    let lines: Vec<&str> = roots.lines().collect();
    assert_eq!(lines[0], "lambda0,multiplicity");
    assert_eq!(lines.len(), 3);
    let report = std::fs::read_to_string(tmp.path().join("report.txt")).unwrap();
    assert!(report.starts_with("mode: verify\n"));
    assert!(report.contains("PASS (strict)"));
    assert!(report.contains("REFUTED-HYPOTHESIS"));
}

#[test]
fn branches_writes_m_plus_one_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config("branches", &example("dirichlet.json"), tmp.path(), &["--grid-steps", "11", "--mesh", "8"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("branches.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[0], "lambda,Lambda_1,Lambda_2,Lambda_3,Lambda_4,Lambda_5,Lambda_6");
    assert!(lines.iter().all(|l| l.split(',').count() == 7));
    assert!(tmp.path().join("branches.gp").exists());
}

#[test]
fn nu_scan_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config("nu-scan", &example("scalar.json"), tmp.path(), &["--grid-steps", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("nu_scan.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("lambda,nu_neg,nu_zero,nu_pos"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = run_config("count", &tmp.path().join("absent.json"), tmp.path(), &[]);
    assert_eq!(missing.status.code(), Some(1));

    let config = write_config(
        tmp.path(),
        r#"{"problem": {"abstract": {"lambda_interval": [0, 4], "coefficients": [[[1]], [[-1]]], "colour": 1}},
            "interval": [1, 2]}"#,
    );
    let unknown = run_config("count", &config, tmp.path(), &[]);
    assert_eq!(unknown.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&unknown.stderr);
    assert!(stderr.contains("problem.abstract.colour"), "{stderr}");

    let config = write_config(tmp.path(), "{\n  \"problem\": [\n}");
    let syntax = run_config("count", &config, tmp.path(), &[]);
    assert_eq!(syntax.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&syntax.stderr).contains("line 3"));

    assert_eq!(run(&["bogus", "--config", "x.json"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn interval_outside_lambda_interval_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#"{"problem": {"abstract": {"lambda_interval": [0, 4], "coefficients": [[[1]], [[-1]]]}},
            "interval": [1, 4]}"#,
    );
    let out = run_config("count", &config, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("interval"));
}
