//! Command implementations behind the `duopoly` binary.
//!
//! Each command reads a scenario JSON file, runs the corresponding library
//! routine, prints a JSON report to stdout, and optionally writes artifacts.
//! Exit codes: 0 on success, 1 on input errors, 2 on verification failures.

use anyhow::{bail, Context, Result};
use duopoly_core::*;
use serde::Serialize;
use std::fs;
use std::path::Path;

/// Outcome of a command that distinguishes "ran fine" from "ran fine but a
/// verification verdict failed".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandStatus {
    Ok,
    VerificationFailed,
}

impl CommandStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            CommandStatus::Ok => 0,
            CommandStatus::VerificationFailed => 2,
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    let scenario: Scenario = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse scenario file {}", path.display()))?;
    Ok(scenario)
}

/// Parses `a,b,c` into a budget-feasible leader allocation.
pub fn parse_gamma1(text: &str, s: &Scenario) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<f64>()
                .with_context(|| format!("invalid allocation entry `{piece}`"))
        })
        .collect::<Result<_>>()?;
    let alloc = AllocationVector::new(values).context("invalid leader allocation")?;
    alloc
        .check_budget(s.budget(Firm::Leader), s.region_count())
        .context("leader allocation violates its budget")?;
    Ok(alloc.values().to_vec())
}

fn write_or_print(json: &str, out: Option<&Path>) -> Result<()> {
    println!("{json}");
    if let Some(path) = out {
        fs::write(path, format!("{json}\n"))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BrOutput<'a> {
    scenario: &'a str,
    mode: SolutionMode,
    gamma1: &'a [f64],
    maximizer_count: usize,
    selection: &'a FollowerSolution,
}

pub fn cmd_br(
    scenario_path: &Path,
    gamma1_text: &str,
    mode: SolutionMode,
    out: Option<&Path>,
) -> Result<CommandStatus> {
    let s = load_scenario(scenario_path)?;
    let gamma1 = parse_gamma1(gamma1_text, &s)?;
    let brset = best_response_set(&gamma1, &s);
    let selection = select_br(&brset, mode.selection(), &gamma1, &s);
    let output = BrOutput {
        scenario: &scenario_path.display().to_string(),
        mode,
        gamma1: &gamma1,
        maximizer_count: brset.len(),
        selection,
    };
    write_or_print(&serde_json::to_string_pretty(&output)?, out)?;
    Ok(CommandStatus::Ok)
}

pub fn cmd_solve(
    scenario_path: &Path,
    mode: SolutionMode,
    tol: f64,
    region_limit: usize,
    out: Option<&Path>,
) -> Result<CommandStatus> {
    let s = load_scenario(scenario_path)?;
    let outcome = solve_stackelberg(&s, mode, &SolveOptions { tol, region_limit })?;
    if let Some(disagreement) = &outcome.reply_disagreement {
        eprintln!("warning: {disagreement}");
    }
    write_or_print(&serde_json::to_string_pretty(&outcome)?, out)?;
    Ok(CommandStatus::Ok)
}

pub fn cmd_sweep(
    scenario_path: &Path,
    b1_list: &str,
    b2_list: &str,
    mode: SolutionMode,
    tol: f64,
    out_dir: &Path,
) -> Result<CommandStatus> {
    let s = load_scenario(scenario_path)?;
    let parse_list = |text: &str| -> Result<Vec<f64>> {
        text.split(',')
            .map(|piece| {
                piece
                    .trim()
                    .parse::<f64>()
                    .with_context(|| format!("invalid budget `{piece}`"))
            })
            .collect()
    };
    let grid = SweepGrid::new(parse_list(b1_list)?, parse_list(b2_list)?)?;
    let options = SolveOptions {
        tol,
        ..SolveOptions::default()
    };
    let rows = run_sweep(&s, &grid, mode, &options)?;
    let claims = evaluate_claims(&rows);

    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let csv_path = out_dir.join("sweep.csv");
    fs::write(&csv_path, sweep_csv(&rows, s.region_count()))
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    let claims_path = out_dir.join("claims.json");
    fs::write(
        &claims_path,
        format!("{}\n", serde_json::to_string_pretty(&claims)?),
    )
    .with_context(|| format!("cannot write {}", claims_path.display()))?;

    println!(
        "wrote {} ({} rows) and {}",
        csv_path.display(),
        rows.len(),
        claims_path.display()
    );
    match claims.follower_higher_at_equal_budgets {
        Some(verdict) => println!("follower earns more at every equal-budget pair: {verdict}"),
        None => println!("no equal-budget pairs in the grid"),
    }
    println!(
        "no pair with B1 <= B2 gives the leader at least the follower's revenue: {} ({} counterexamples)",
        claims.no_b1_le_b2_with_u1_ge_u2,
        claims.counterexamples.len()
    );
    Ok(CommandStatus::Ok)
}

#[derive(Serialize)]
struct NamedReport {
    name: &'static str,
    step: f64,
    #[serde(flatten)]
    report: OracleReport,
}

#[derive(Serialize)]
struct VerifyOutput {
    scenario: String,
    regions_used: usize,
    tolerance: f64,
    reports: Vec<NamedReport>,
    all_pass: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_verify(
    scenario_path: &Path,
    step: Option<f64>,
    k_max: usize,
    tol: f64,
    max_points: u64,
    out: Option<&Path>,
) -> Result<CommandStatus> {
    let full = load_scenario(scenario_path)?;
    if k_max == 0 {
        bail!("--k-max must be at least 1");
    }
    let k_used = full.region_count().min(k_max);
    let s = full.restrict_regions(&(0..k_used).collect::<Vec<_>>())?;
    let zero = vec![0.0; k_used];

    let mut reports = Vec::new();

    // Follower check: closed form vs grid, idle leader.
    let follower_step = step
        .unwrap_or(0.001 * s.budget(Firm::Follower))
        .max(f64::MIN_POSITIVE);
    let grid = GridSpec::with_max_points(follower_step, max_points);
    let (best_point, grid_u) = oracle_follower_br(&zero, &s, &grid)?;
    let exact = best_response_set(&zero, &s)[0].utility;
    reports.push(NamedReport {
        name: "follower_best_response",
        step: follower_step,
        report: OracleReport::new(exact, grid_u, best_point, tol),
    });

    // Bilevel checks, both modes.
    let leader_step = step
        .unwrap_or(0.01 * s.budget(Firm::Leader))
        .max(f64::MIN_POSITIVE);
    let bilevel_grid = GridSpec::with_max_points(leader_step, max_points);
    for (name, mode) in [
        ("bilevel_weak", SolutionMode::Weak),
        ("bilevel_strong", SolutionMode::Strong),
    ] {
        let solved = solve_stackelberg(&s, mode, &SolveOptions::default())?;
        let oracle = oracle_stackelberg(&s, &bilevel_grid, mode)?;
        reports.push(NamedReport {
            name,
            step: leader_step,
            report: OracleReport::new(solved.u1, oracle.u1, oracle.gamma1, tol),
        });
    }

    let all_pass = reports.iter().all(|r| r.report.passed());
    let output = VerifyOutput {
        scenario: scenario_path.display().to_string(),
        regions_used: k_used,
        tolerance: tol,
        reports,
        all_pass,
    };
    write_or_print(&serde_json::to_string_pretty(&output)?, out)?;
    if all_pass {
        Ok(CommandStatus::Ok)
    } else {
        Ok(CommandStatus::VerificationFailed)
    }
}

#[derive(Serialize)]
struct SimulateOutput {
    scenario: String,
    region: usize,
    gamma1: f64,
    gamma2: f64,
    follower_start: f64,
    samples: usize,
    report: SteadyStateReport,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_simulate(
    scenario_path: &Path,
    region_one_based: usize,
    gamma1: f64,
    gamma2: f64,
    horizon: f64,
    dt: f64,
    seeds: SeedLevels,
    tol: f64,
    out: Option<&Path>,
) -> Result<CommandStatus> {
    let s = load_scenario(scenario_path)?;
    if region_one_based == 0 || region_one_based > s.region_count() {
        bail!(
            "region {} out of range 1..={}",
            region_one_based,
            s.region_count()
        );
    }
    if gamma1 < 0.0 || gamma2 < 0.0 {
        bail!("spends must be nonnegative");
    }
    let k = region_one_based - 1;
    let traj = simulate_bi_sis(k, gamma1, gamma2, &s, horizon, dt, seeds)?;
    let report = steady_state_check(&traj, k, gamma1, gamma2, &s, tol);

    if let Some(path) = out {
        let mut csv = String::from("time,x1,x2\n");
        for i in 0..traj.times.len() {
            csv.push_str(&format!(
                "{},{},{}\n",
                format_sig9(traj.times[i]),
                format_sig9(traj.x1[i]),
                format_sig9(traj.x2[i])
            ));
        }
        fs::write(path, csv).with_context(|| format!("cannot write {}", path.display()))?;
    }

    let failed = report.verdict == SteadyStateVerdict::Fail;
    let output = SimulateOutput {
        scenario: scenario_path.display().to_string(),
        region: region_one_based,
        gamma1,
        gamma2,
        follower_start: traj.follower_start,
        samples: traj.times.len(),
        report,
    };
    println!("{}", serde_json::to_string_pretty(&output)?);
    if failed {
        Ok(CommandStatus::VerificationFailed)
    } else {
        Ok(CommandStatus::Ok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn write_scenario(dir: &Path) -> PathBuf {
        let path = dir.join("s.json");
        fs::write(
            &path,
            r#"{"K":2,"p1":[1.0,2.0],"p2":[2.0,1.0],"delta1":[0.4,0.2],"delta2":[0.2,0.4],"pi":1e-6,"B1":1.0,"B2":1.0}"#,
        )
        .unwrap();
        path
    }

    #[test]
    fn gamma_parsing_checks_length_and_budget() {
        let dir = tempfile::tempdir().unwrap();
        let s = load_scenario(&write_scenario(dir.path())).unwrap();
        assert_eq!(parse_gamma1("0.5, 0.5", &s).unwrap(), vec![0.5, 0.5]);
        assert!(parse_gamma1("0.5", &s).is_err());
        assert!(parse_gamma1("0.9,0.9", &s).is_err());
        assert!(parse_gamma1("-0.1,0.5", &s).is_err());
        assert!(parse_gamma1("abc,0.5", &s).is_err());
    }

    #[test]
    fn missing_field_errors_name_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(
            &path,
            r#"{"K":1,"p1":[1],"p2":[1],"delta1":[0.1],"delta2":[0.1],"B1":1,"B2":1}"#,
        )
        .unwrap();
        let err = format!("{:#}", load_scenario(&path).unwrap_err());
        assert!(
            err.contains("pi"),
            "error should name the missing field: {err}"
        );
    }

    #[test]
    fn negative_budget_is_an_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(
            &path,
            r#"{"K":1,"p1":[1],"p2":[1],"delta1":[0.1],"delta2":[0.1],"pi":1e-6,"B1":-1,"B2":1}"#,
        )
        .unwrap();
        let err = format!("{:#}", load_scenario(&path).unwrap_err());
        assert!(err.contains("B1") || err.contains("budget"), "{err}");
    }

    #[test]
    fn status_exit_codes() {
        assert_eq!(CommandStatus::Ok.exit_code(), 0);
        assert_eq!(CommandStatus::VerificationFailed.exit_code(), 2);
    }
}
