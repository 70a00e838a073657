//! End-to-end tests of the `duopoly` binary: exit codes, output schemas,
//! and byte determinism of the sweep artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_duopoly"))
}

fn bundled_scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/five_regions.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

#[test]
fn solve_reproduces_the_benchmark_equilibrium() {
    let scenario = bundled_scenario();
    let output = run(&[
        "solve",
        "--scenario",
        scenario.to_str().unwrap(),
        "--mode",
        "weak",
    ]);
    assert!(output.status.success());
    let json = stdout_json(&output);
    assert_eq!(json["mode"], "weak");
    // Regions 4 and 5 are bits 3 and 4.
    assert_eq!(json["k1"], 0b11000);
    assert_eq!(json["k2"], 0b00011);
    let u1 = json["u1"].as_f64().unwrap();
    let u2 = json["u2"].as_f64().unwrap();
    assert!((u1 - 4.7252).abs() < 1e-3);
    assert!((u2 - 2.5120).abs() < 1e-3);
    assert_eq!(json["per_subset_values"].as_array().unwrap().len(), 32);
    assert!(json["reply_disagreement"].is_null());
}

#[test]
fn br_reports_the_follower_selection() {
    let scenario = bundled_scenario();
    let output = run(&[
        "br",
        "--scenario",
        scenario.to_str().unwrap(),
        "--gamma1",
        "0,0,0,0.3351,0.2649",
        "--mode",
        "weak",
    ]);
    assert!(output.status.success());
    let json = stdout_json(&output);
    assert_eq!(json["selection"]["winning_set"], 0b00011);
    let utility = json["selection"]["utility"].as_f64().unwrap();
    assert!((utility - 2.5120).abs() < 1e-3);
}

#[test]
fn bad_allocation_length_is_an_input_error() {
    let scenario = bundled_scenario();
    let output = run(&[
        "br",
        "--scenario",
        scenario.to_str().unwrap(),
        "--gamma1",
        "0.1,0.2",
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn missing_scenario_file_is_an_input_error() {
    let output = run(&["solve", "--scenario", "/nonexistent/file.json"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("error"));
}

#[test]
fn scenario_without_pi_is_rejected_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("no_pi.json");
    fs::write(
        &path,
        r#"{"K":1,"p1":[1],"p2":[1],"delta1":[0.1],"delta2":[0.1],"B1":1,"B2":1}"#,
    )
    .unwrap();
    let output = run(&["solve", "--scenario", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("pi"));
}

#[test]
fn negative_budget_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("neg.json");
    fs::write(
        &path,
        r#"{"K":1,"p1":[1],"p2":[1],"delta1":[0.1],"delta2":[0.1],"pi":1e-6,"B1":-1,"B2":1}"#,
    )
    .unwrap();
    let output = run(&["solve", "--scenario", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn sweep_writes_deterministic_artifacts() {
    let scenario = bundled_scenario();
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "sweep",
            "--scenario",
            scenario.to_str().unwrap(),
            "--b1",
            "0.6,1.7,2.8,3.9,5.0",
            "--b2",
            "0.6,1.7,2.8,3.9,5.0",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(
            output.status.success(),
            "{}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
    let csv_a = fs::read(out_a.join("sweep.csv")).unwrap();
    let csv_b = fs::read(out_b.join("sweep.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "sweep.csv differs between runs");
    assert_eq!(
        fs::read(out_a.join("claims.json")).unwrap(),
        fs::read(out_b.join("claims.json")).unwrap(),
        "claims.json differs between runs"
    );

    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("B1,B2,mode,u1,u2,K1_bitmask,K2_bitmask,gamma1_1"));
    assert_eq!(text.lines().count(), 26);
    let claims: serde_json::Value =
        serde_json::from_slice(&fs::read(out_a.join("claims.json")).unwrap()).unwrap();
    assert!(claims["follower_higher_at_equal_budgets"].is_boolean());
    assert!(claims["no_b1_le_b2_with_u1_ge_u2"].is_boolean());
}

#[test]
fn unsorted_budget_list_is_an_input_error() {
    let scenario = bundled_scenario();
    let dir = tempfile::tempdir().unwrap();
    let output = run(&[
        "sweep",
        "--scenario",
        scenario.to_str().unwrap(),
        "--b1",
        "1.0,0.5",
        "--b2",
        "1.0",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn verify_passes_on_a_small_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.json");
    fs::write(
        &path,
        r#"{"K":2,"p1":[1.0,2.0],"p2":[2.0,1.0],"delta1":[0.4,0.2],"delta2":[0.2,0.4],"pi":1e-6,"B1":1.0,"B2":1.0}"#,
    )
    .unwrap();
    let output = run(&[
        "verify",
        "--scenario",
        path.to_str().unwrap(),
        "--k-max",
        "2",
    ]);
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let json = stdout_json(&output);
    assert_eq!(json["all_pass"], true);
    assert_eq!(json["reports"].as_array().unwrap().len(), 3);
    for report in json["reports"].as_array().unwrap() {
        assert_eq!(report["verdict"], "pass");
    }
}

#[test]
fn verify_flags_a_grid_too_coarse_to_reproduce_the_contest() {
    // At step 0.7 the follower's grid misses the entry threshold the exact
    // follower clears, so the grid bilevel value exceeds anything the true
    // leader can get: one report fails and the exit code is 2.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("coarse.json");
    fs::write(
        &path,
        r#"{"K":1,"p1":[1.0],"p2":[1.0],"delta1":[0.25],"delta2":[0.25],"pi":1e-6,"B1":0.99,"B2":1.0}"#,
    )
    .unwrap();
    let output = run(&[
        "verify",
        "--scenario",
        path.to_str().unwrap(),
        "--k-max",
        "1",
        "--step",
        "0.7",
    ]);
    assert_eq!(
        output.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&output.stdout)
    );
    let json = stdout_json(&output);
    assert_eq!(json["all_pass"], false);
}

#[test]
fn oversized_grid_is_an_input_error() {
    let scenario = bundled_scenario();
    let output = run(&[
        "verify",
        "--scenario",
        scenario.to_str().unwrap(),
        "--k-max",
        "3",
        "--step",
        "1e-9",
    ]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn simulate_reports_and_writes_a_trajectory() {
    let scenario = bundled_scenario();
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("traj.csv");
    let output = run(&[
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--region",
        "1",
        "--gamma1",
        "1.0",
        "--gamma2",
        "0.0",
        "--horizon",
        "2000",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let json = stdout_json(&output);
    assert_eq!(json["report"]["verdict"], "pass");
    let x1 = json["report"]["observed_x1"].as_f64().unwrap();
    assert!((x1 - 0.5).abs() < 1e-2);
    let body = fs::read_to_string(&csv_path).unwrap();
    assert!(body.starts_with("time,x1,x2\n"));
    assert!(body.lines().count() > 100);
}

#[test]
fn simulate_region_out_of_range_is_an_input_error() {
    let scenario = bundled_scenario();
    let output = run(&[
        "simulate",
        "--scenario",
        scenario.to_str().unwrap(),
        "--region",
        "6",
        "--gamma1",
        "1.0",
        "--gamma2",
        "0.0",
    ]);
    assert_eq!(output.status.code(), Some(1));
}
