//! Budget sweeps and the claims report.
//!
//! Solves the game over a grid of `(B1, B2)` budget pairs, renders the rows
//! as deterministic CSV (fixed column order, 9 significant digits), and
//! evaluates two empirical claims about the outcome: whether the follower
//! out-earns the leader at equal budgets, and whether any `B1 ≤ B2` pair
//! lets the leader earn at least as much as the follower. The claims are
//! findings to be reported, not assertions.

use crate::leader::{solve_stackelberg, SolveError, SolveOptions, StackelbergOutcome};
use crate::model::{Scenario, SolutionMode};
use crate::regions::RegionSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Budget grid of a sweep: ascending lists for each firm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub b1_values: Vec<f64>,
    pub b2_values: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("budget lists must be nonempty")]
    Empty,
    #[error("budget lists must be nonnegative")]
    Negative,
    #[error("budget lists must be strictly ascending")]
    NotAscending,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

impl SweepGrid {
    pub fn new(b1_values: Vec<f64>, b2_values: Vec<f64>) -> Result<Self, SweepError> {
        for list in [&b1_values, &b2_values] {
            if list.is_empty() {
                return Err(SweepError::Empty);
            }
            if list.iter().any(|&b| b < 0.0 || !b.is_finite()) {
                return Err(SweepError::Negative);
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SweepError::NotAscending);
            }
        }
        Ok(SweepGrid {
            b1_values,
            b2_values,
        })
    }
}

/// One solved budget pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub b1: f64,
    pub b2: f64,
    pub mode: SolutionMode,
    pub u1: f64,
    pub u2: f64,
    pub k1: RegionSet,
    pub k2: RegionSet,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    /// Carried along so reply-formula mismatches surface in sweep output.
    pub reply_disagreement: bool,
}

impl SweepRow {
    fn from_outcome(b1: f64, b2: f64, outcome: &StackelbergOutcome) -> Self {
        SweepRow {
            b1,
            b2,
            mode: outcome.mode,
            u1: outcome.u1,
            u2: outcome.u2,
            k1: outcome.k1,
            k2: outcome.k2,
            gamma1: outcome.gamma1.values().to_vec(),
            gamma2: outcome.gamma2.values().to_vec(),
            reply_disagreement: outcome.reply_disagreement.is_some(),
        }
    }
}

/// Solves every `(B1, B2)` pair of the grid, B1 outer, B2 inner.
pub fn run_sweep(
    scenario: &Scenario,
    grid: &SweepGrid,
    mode: SolutionMode,
    options: &SolveOptions,
) -> Result<Vec<SweepRow>, SweepError> {
    let mut rows = Vec::with_capacity(grid.b1_values.len() * grid.b2_values.len());
    for &b1 in &grid.b1_values {
        for &b2 in &grid.b2_values {
            let s = scenario.with_budgets(b1, b2);
            let outcome = solve_stackelberg(&s, mode, options)?;
            rows.push(SweepRow::from_outcome(b1, b2, &outcome));
        }
    }
    Ok(rows)
}

/// Rounds to 9 significant digits and prints the shortest representation.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(8 - exponent);
    let rounded = (x * scale).round() / scale;
    format!("{rounded}")
}

/// CSV with the fixed header
/// `B1,B2,mode,u1,u2,K1_bitmask,K2_bitmask,gamma1_1..K,gamma2_1..K`.
pub fn sweep_csv(rows: &[SweepRow], region_count: usize) -> String {
    let mut out = String::from("B1,B2,mode,u1,u2,K1_bitmask,K2_bitmask");
    for k in 1..=region_count {
        out.push_str(&format!(",gamma1_{k}"));
    }
    for k in 1..=region_count {
        out.push_str(&format!(",gamma2_{k}"));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            format_sig9(row.b1),
            format_sig9(row.b2),
            row.mode,
            format_sig9(row.u1),
            format_sig9(row.u2),
            row.k1.mask(),
            row.k2.mask()
        ));
        for &g in &row.gamma1 {
            out.push(',');
            out.push_str(&format_sig9(g));
        }
        for &g in &row.gamma2 {
            out.push(',');
            out.push_str(&format_sig9(g));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualBudgetCase {
    pub budget: f64,
    pub u1: f64,
    pub u2: f64,
    pub follower_higher: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceCounterexample {
    pub b1: f64,
    pub b2: f64,
    pub u1: f64,
    pub u2: f64,
}

/// Verdicts on the two sweep claims.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimsReport {
    pub mode: SolutionMode,
    /// Diagonal cases (`B1 = B2` present in both lists).
    pub equal_budget_cases: Vec<EqualBudgetCase>,
    /// `u2 > u1` on every diagonal case; absent when the grid has no
    /// diagonal.
    pub follower_higher_at_equal_budgets: Option<bool>,
    /// No row with `B1 ≤ B2` has `u1 ≥ u2`.
    pub no_b1_le_b2_with_u1_ge_u2: bool,
    pub counterexamples: Vec<DominanceCounterexample>,
}

pub fn evaluate_claims(rows: &[SweepRow]) -> ClaimsReport {
    let mode = rows.first().map_or(SolutionMode::Weak, |r| r.mode);
    let equal_budget_cases: Vec<EqualBudgetCase> = rows
        .iter()
        .filter(|r| r.b1 == r.b2)
        .map(|r| EqualBudgetCase {
            budget: r.b1,
            u1: r.u1,
            u2: r.u2,
            follower_higher: r.u2 > r.u1,
        })
        .collect();
    let follower_higher_at_equal_budgets = if equal_budget_cases.is_empty() {
        None
    } else {
        Some(equal_budget_cases.iter().all(|c| c.follower_higher))
    };
    let counterexamples: Vec<DominanceCounterexample> = rows
        .iter()
        .filter(|r| r.b1 <= r.b2 && r.u1 >= r.u2)
        .map(|r| DominanceCounterexample {
            b1: r.b1,
            b2: r.b2,
            u1: r.u1,
            u2: r.u2,
        })
        .collect();
    ClaimsReport {
        mode,
        equal_budget_cases,
        follower_higher_at_equal_budgets,
        no_b1_le_b2_with_u1_ge_u2: counterexamples.is_empty(),
        counterexamples,
    }
}
