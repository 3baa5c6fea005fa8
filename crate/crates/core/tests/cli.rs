//! End-to-end runs of the `fdlab` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fdlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdlab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn greens_and_solve_b_for_a_symmetric_pair() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"n": 3, "ansatz": {"points": [[0.3, 0, 0], [-0.3, 0, 0]]}}"#).unwrap();
    let o = fdlab(&["greens", "--config", "c.json", "--out", "g"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let g = json_file(&dir.path().join("g/summary.json"));
    assert_eq!(g["positive_definite"], Value::Bool(true));
    assert!(dir.path().join("g/resolved_config.json").exists());

    let o = fdlab(&["solve-b", "--config", "c.json", "--out", "b", "--threads", "2"], dir.path());
    assert!(o.status.success());
    let b = json_file(&dir.path().join("b/summary.json"));
    let (b0, b1) = (b["b"][0].as_f64().unwrap(), b["b"][1].as_f64().unwrap());
    assert!((b0 - b1).abs() < 1e-10 * b0);
}

#[test]
fn simulate_then_fit_supercritical_bump() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("sim.json"),
        r#"{"n": 3, "m": 0.5, "grid": {"intervals": 128, "stretching": "uniform"},
            "simulation": {"initial": {"bump": {"amplitude": 1.0}}},
            "fit": {"csv": "s/simulation.csv", "model": "pure_power"}}"#,
    )
    .unwrap();
    let o = fdlab(&["simulate", "--config", "sim.json", "--out", "s"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = fdlab(&["fit", "--config", "sim.json", "--out", "f"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = json_file(&p.join("f/fit.json"));
    assert!((fit["power"].as_f64().unwrap() - 2.0).abs() < 0.05);
    assert!(p.join("f/fit_plot.csv").exists());
}

#[test]
fn simulation_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("sim.json"),
        r#"{"n": 3, "m": 0.5, "grid": {"intervals": 64}, "simulation": {"initial": {"bump": {"amplitude": 2.0}}}}"#,
    )
    .unwrap();
    for (out, threads) in [("a", "1"), ("b", "3")] {
        let o = fdlab(&["simulate", "--config", "sim.json", "--out", out, "--threads", threads], p);
        assert!(o.status.success());
    }
    let a = std::fs::read(p.join("a/simulation.csv")).unwrap();
    let b = std::fs::read(p.join("b/simulation.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_errors_exit_2_with_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"n": 3, "grid": {"cells": 10}}"#).unwrap();
    let o = fdlab(&["greens", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "Config");
    assert_eq!(err["exit_code"], 2);

    let o = fdlab(&["greens", "--config", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = fdlab(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_radial_ansatz_simulation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"n": 3, "ansatz": {"points": [[0.1, 0, 0]]}}"#).unwrap();
    let o = fdlab(&["simulate", "--config", "c.json", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "AnsatzNotRadial");
}

#[test]
fn check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = fdlab(&["check", "--out", "c"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
    assert!(dir.path().join("c/check.json").exists());
}
