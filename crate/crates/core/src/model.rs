//! Game data and the winner-takes-all market model.
//!
//! Two firms spread a subscription service over `K` independent regions. In
//! region `k`, firm `m` buys a spreading rate `γ_mk` (its per-region budget
//! share) and faces a churn rate `δ_mk`. The long-run outcome in each region
//! is winner-takes-all: the firm whose rate-to-churn ratio `γ/δ` clears both
//! 1 and the rival's ratio keeps the whole subscribed fraction `1 − δ/γ`,
//! the other firm keeps nothing. The follower (firm 2) must additionally
//! clear the leader's ratio by the entry barrier `π > 0`, which also makes
//! the two winning cases disjoint.
//!
//! Revenues are additive across regions: firm `m` earns
//! `p_mk · (1 − δ_mk/γ_mk)` in every region it wins.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance on `γ/δ` ratio comparisons.
pub const RATIO_TOL: f64 = 1e-12;
/// Tolerance on budget sums.
pub const BUDGET_TOL: f64 = 1e-9;
/// Utility differences below this are treated as ties when collecting
/// best-response maximizers.
pub const VALUE_TIE_TOL: f64 = 1e-9;
/// Interior allocations must exceed their entry cost by at least this much;
/// exact-boundary candidates are represented through the boundary set instead.
pub const STRICT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("scenario must have at least one region")]
    NoRegions,
    #[error("field {field} has length {got}, expected K = {expected}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("churn rate delta{firm}[{region}] must be strictly positive")]
    NonPositiveChurn { firm: u8, region: usize },
    #[error("revenue weight p{firm}[{region}] must be nonnegative")]
    NegativeRevenue { firm: u8, region: usize },
    #[error("budget B{firm} must be nonnegative")]
    NegativeBudget { firm: u8 },
    #[error("barrier to entry pi must be strictly positive")]
    NonPositivePi,
    #[error("field {field} contains a non-finite value")]
    NonFinite { field: &'static str },
}

/// Which firm a parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Firm {
    Leader,
    Follower,
}

/// All parameters of one game instance.
///
/// Construction validates every invariant, so a `Scenario` in hand is always
/// usable: `K ≥ 1`, churn rates strictly positive, revenues and budgets
/// nonnegative, `π > 0`, vectors of matching length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario", into = "RawScenario")]
pub struct Scenario {
    region_count: usize,
    p1: Vec<f64>,
    p2: Vec<f64>,
    delta1: Vec<f64>,
    delta2: Vec<f64>,
    pi: f64,
    b1: f64,
    b2: f64,
}

/// Wire format: `{"K":…, "p1":[…], "p2":[…], "delta1":[…], "delta2":[…],
/// "pi":…, "B1":…, "B2":…}`.
#[derive(Serialize, Deserialize)]
struct RawScenario {
    #[serde(rename = "K")]
    k: usize,
    p1: Vec<f64>,
    p2: Vec<f64>,
    delta1: Vec<f64>,
    delta2: Vec<f64>,
    pi: f64,
    #[serde(rename = "B1")]
    b1: f64,
    #[serde(rename = "B2")]
    b2: f64,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = ScenarioError;

    fn try_from(raw: RawScenario) -> Result<Self, Self::Error> {
        Scenario::new(
            raw.k, raw.p1, raw.p2, raw.delta1, raw.delta2, raw.pi, raw.b1, raw.b2,
        )
    }
}

impl From<Scenario> for RawScenario {
    fn from(s: Scenario) -> Self {
        RawScenario {
            k: s.region_count,
            p1: s.p1,
            p2: s.p2,
            delta1: s.delta1,
            delta2: s.delta2,
            pi: s.pi,
            b1: s.b1,
            b2: s.b2,
        }
    }
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        region_count: usize,
        p1: Vec<f64>,
        p2: Vec<f64>,
        delta1: Vec<f64>,
        delta2: Vec<f64>,
        pi: f64,
        b1: f64,
        b2: f64,
    ) -> Result<Self, ScenarioError> {
        if region_count == 0 {
            return Err(ScenarioError::NoRegions);
        }
        for (field, v) in [
            ("p1", &p1),
            ("p2", &p2),
            ("delta1", &delta1),
            ("delta2", &delta2),
        ] {
            if v.len() != region_count {
                return Err(ScenarioError::LengthMismatch {
                    field,
                    expected: region_count,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(ScenarioError::NonFinite { field });
            }
        }
        for (field, x) in [("pi", pi), ("B1", b1), ("B2", b2)] {
            if !x.is_finite() {
                return Err(ScenarioError::NonFinite { field });
            }
        }
        for (firm, deltas) in [(1u8, &delta1), (2u8, &delta2)] {
            if let Some(region) = deltas.iter().position(|&d| d <= 0.0) {
                return Err(ScenarioError::NonPositiveChurn { firm, region });
            }
        }
        for (firm, ps) in [(1u8, &p1), (2u8, &p2)] {
            if let Some(region) = ps.iter().position(|&p| p < 0.0) {
                return Err(ScenarioError::NegativeRevenue { firm, region });
            }
        }
        if b1 < 0.0 {
            return Err(ScenarioError::NegativeBudget { firm: 1 });
        }
        if b2 < 0.0 {
            return Err(ScenarioError::NegativeBudget { firm: 2 });
        }
        if pi <= 0.0 {
            return Err(ScenarioError::NonPositivePi);
        }
        Ok(Scenario {
            region_count,
            p1,
            p2,
            delta1,
            delta2,
            pi,
            b1,
            b2,
        })
    }

    pub fn region_count(&self) -> usize {
        self.region_count
    }

    pub fn pi(&self) -> f64 {
        self.pi
    }

    pub fn budget(&self, firm: Firm) -> f64 {
        match firm {
            Firm::Leader => self.b1,
            Firm::Follower => self.b2,
        }
    }

    pub fn revenue(&self, firm: Firm, k: usize) -> f64 {
        match firm {
            Firm::Leader => self.p1[k],
            Firm::Follower => self.p2[k],
        }
    }

    pub fn churn(&self, firm: Firm, k: usize) -> f64 {
        match firm {
            Firm::Leader => self.delta1[k],
            Firm::Follower => self.delta2[k],
        }
    }

    /// Spread-to-churn ratio `γ/δ` for one firm and region.
    pub fn ratio(&self, firm: Firm, k: usize, spend: f64) -> f64 {
        spend / self.churn(firm, k)
    }

    /// Same scenario with budgets replaced (used by budget sweeps).
    #[must_use]
    pub fn with_budgets(&self, b1: f64, b2: f64) -> Scenario {
        let mut s = self.clone();
        s.b1 = b1.max(0.0);
        s.b2 = b2.max(0.0);
        s
    }

    /// Sub-scenario keeping only the listed regions, in the given order.
    pub fn restrict_regions(&self, regions: &[usize]) -> Result<Scenario, ScenarioError> {
        let pick = |v: &Vec<f64>| regions.iter().map(|&k| v[k]).collect::<Vec<f64>>();
        Scenario::new(
            regions.len(),
            pick(&self.p1),
            pick(&self.p2),
            pick(&self.delta1),
            pick(&self.delta2),
            self.pi,
            self.b1,
            self.b2,
        )
    }

    /// The mirror game: firm parameters (revenues, churn rates, budgets)
    /// exchanged, so the old follower leads.
    #[must_use]
    pub fn swap_firms(&self) -> Scenario {
        Scenario {
            region_count: self.region_count,
            p1: self.p2.clone(),
            p2: self.p1.clone(),
            delta1: self.delta2.clone(),
            delta2: self.delta1.clone(),
            pi: self.pi,
            b1: self.b2,
            b2: self.b1,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AllocationError {
    #[error("allocation has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("allocation entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("allocation entry {index} is not finite")]
    NonFiniteEntry { index: usize },
    #[error("allocation sums to {sum}, exceeding budget {budget}")]
    BudgetExceeded { sum: f64, budget: f64 },
}

/// One firm's per-region budget split: nonnegative entries, one per region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AllocationVector(Vec<f64>);

impl AllocationVector {
    /// Validates nonnegativity and finiteness. Budget feasibility is checked
    /// separately via [`AllocationVector::check_budget`] since the owning
    /// firm's budget is context.
    pub fn new(values: Vec<f64>) -> Result<Self, AllocationError> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(AllocationError::NonFiniteEntry { index });
            }
            if value < 0.0 {
                return Err(AllocationError::NegativeEntry { index, value });
            }
        }
        Ok(AllocationVector(values))
    }

    pub fn zeros(region_count: usize) -> Self {
        AllocationVector(vec![0.0; region_count])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `Σγ ≤ budget` within [`BUDGET_TOL`], and the expected length.
    pub fn check_budget(&self, budget: f64, region_count: usize) -> Result<(), AllocationError> {
        if self.0.len() != region_count {
            return Err(AllocationError::LengthMismatch {
                expected: region_count,
                got: self.0.len(),
            });
        }
        let sum = self.sum();
        if sum > budget + BUDGET_TOL {
            return Err(AllocationError::BudgetExceeded { sum, budget });
        }
        Ok(())
    }
}

impl std::ops::Deref for AllocationVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for AllocationVector {
    fn from(values: Vec<f64>) -> Self {
        AllocationVector(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    Leader,
    Follower,
    Nobody,
}

/// Long-run market split of one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionOutcome {
    pub winner: Winner,
    /// Leader's subscribed fraction.
    pub x1_inf: f64,
    /// Follower's subscribed fraction.
    pub x2_inf: f64,
    /// Unsubscribed fraction, `1 − x1 − x2`.
    pub s_inf: f64,
}

/// Winner-takes-all steady state of region `k` under spends `(g1, g2)`.
///
/// The leader keeps the region when `g1/δ1 ≥ max(g2/δ2, 1)`; the follower
/// takes it when `g2/δ2 ≥ max(g1/δ1 + π, 1)`; otherwise nobody retains
/// subscribers. Comparisons carry an absolute slack of [`RATIO_TOL`] so that
/// allocations constructed to sit exactly on a boundary classify as written;
/// the leader-wins case is tested first, so the leader keeps exact ties.
pub fn region_outcome(k: usize, g1: f64, g2: f64, s: &Scenario) -> RegionOutcome {
    debug_assert!(g1 >= 0.0 && g2 >= 0.0);
    let r1 = s.ratio(Firm::Leader, k, g1);
    let r2 = s.ratio(Firm::Follower, k, g2);
    if r1 >= r2.max(1.0) - RATIO_TOL {
        let x1 = (1.0 - s.churn(Firm::Leader, k) / g1).max(0.0);
        RegionOutcome {
            winner: Winner::Leader,
            x1_inf: x1,
            x2_inf: 0.0,
            s_inf: 1.0 - x1,
        }
    } else if r2 >= (r1 + s.pi()).max(1.0) - RATIO_TOL {
        let x2 = (1.0 - s.churn(Firm::Follower, k) / g2).max(0.0);
        RegionOutcome {
            winner: Winner::Follower,
            x1_inf: 0.0,
            x2_inf: x2,
            s_inf: 1.0 - x2,
        }
    } else {
        RegionOutcome {
            winner: Winner::Nobody,
            x1_inf: 0.0,
            x2_inf: 0.0,
            s_inf: 1.0,
        }
    }
}

/// Leader's total revenue: `Σ_k p1k·x1k` over regions it wins.
pub fn leader_utility(gamma1: &[f64], gamma2: &[f64], s: &Scenario) -> f64 {
    assert_eq!(gamma1.len(), s.region_count());
    assert_eq!(gamma2.len(), s.region_count());
    (0..s.region_count())
        .map(|k| s.revenue(Firm::Leader, k) * region_outcome(k, gamma1[k], gamma2[k], s).x1_inf)
        .sum()
}

/// Follower's total revenue: `Σ_k p2k·x2k` over regions it wins.
///
/// Note the argument order: the follower's own allocation comes first.
pub fn follower_utility(gamma2: &[f64], gamma1: &[f64], s: &Scenario) -> f64 {
    assert_eq!(gamma1.len(), s.region_count());
    assert_eq!(gamma2.len(), s.region_count());
    (0..s.region_count())
        .map(|k| s.revenue(Firm::Follower, k) * region_outcome(k, gamma1[k], gamma2[k], s).x2_inf)
        .sum()
}

/// Whether the solver maximizes the leader's value against the follower's
/// worst-case (weak/pessimistic) or best-case (strong/optimistic) tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionMode {
    Weak,
    Strong,
}

impl SolutionMode {
    pub fn selection(self) -> BrSelection {
        match self {
            SolutionMode::Weak => BrSelection::Pessimistic,
            SolutionMode::Strong => BrSelection::Optimistic,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolutionMode::Weak => "weak",
            SolutionMode::Strong => "strong",
        }
    }
}

impl std::fmt::Display for SolutionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SolutionMode {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        match text {
            "weak" => Ok(SolutionMode::Weak),
            "strong" => Ok(SolutionMode::Strong),
            other => Err(format!(
                "unknown mode `{other}`, expected `weak` or `strong`"
            )),
        }
    }
}

/// How to break ties among follower best responses: against the leader
/// (pessimistic, weak solutions) or in the leader's favor (optimistic,
/// strong solutions).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrSelection {
    Pessimistic,
    Optimistic,
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The bundled five-region benchmark parameters.
    pub fn five_regions(b1: f64, b2: f64) -> Scenario {
        Scenario::new(
            5,
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            vec![2.0, 3.0, 1.0, 5.0, 4.0],
            vec![0.5, 0.4, 0.3, 0.2, 0.1],
            vec![0.1, 0.2, 0.3, 0.4, 0.5],
            1e-6,
            b1,
            b2,
        )
        .unwrap()
    }

    #[test]
    fn five_region_parameters_validate() {
        let s = five_regions(0.6, 0.6);
        assert_eq!(s.region_count(), 5);
        assert_eq!(s.budget(Firm::Leader), 0.6);
    }

    #[test]
    fn zero_churn_is_rejected() {
        let err = Scenario::new(
            2,
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![0.0, 0.4],
            vec![0.1, 0.2],
            1e-6,
            1.0,
            1.0,
        )
        .unwrap_err();
        assert_eq!(err, ScenarioError::NonPositiveChurn { firm: 1, region: 0 });
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let err = Scenario::new(
            5,
            vec![1.0, 2.0, 3.0, 4.0],
            vec![2.0, 3.0, 1.0, 5.0, 4.0],
            vec![0.5, 0.4, 0.3, 0.2, 0.1],
            vec![0.1, 0.2, 0.3, 0.4, 0.5],
            1e-6,
            0.6,
            0.6,
        )
        .unwrap_err();
        assert_eq!(
            err,
            ScenarioError::LengthMismatch {
                field: "p1",
                expected: 5,
                got: 4
            }
        );
    }

    #[test]
    fn negative_budget_and_nonpositive_pi_are_rejected() {
        assert_eq!(
            Scenario::new(
                1,
                vec![1.0],
                vec![1.0],
                vec![0.1],
                vec![0.1],
                1e-6,
                -1.0,
                0.0
            ),
            Err(ScenarioError::NegativeBudget { firm: 1 })
        );
        assert_eq!(
            Scenario::new(1, vec![1.0], vec![1.0], vec![0.1], vec![0.1], 0.0, 1.0, 0.0),
            Err(ScenarioError::NonPositivePi)
        );
    }

    #[test]
    fn leader_keeps_region_when_its_ratio_clears_both_bars() {
        let s = five_regions(0.6, 0.6);
        let out = region_outcome(0, 1.0, 0.0, &s);
        assert_eq!(out.winner, Winner::Leader);
        assert!((out.x1_inf - 0.5).abs() < 1e-15);
        assert_eq!(out.x2_inf, 0.0);
    }

    #[test]
    fn nobody_wins_when_both_ratios_below_one() {
        let s = five_regions(0.6, 0.6);
        let out = region_outcome(0, 0.4, 0.0, &s);
        assert_eq!(out.winner, Winner::Nobody);
        assert_eq!((out.x1_inf, out.x2_inf), (0.0, 0.0));
        assert_eq!(out.s_inf, 1.0);
    }

    #[test]
    fn follower_takes_region_when_it_clears_the_barrier() {
        let s = five_regions(0.6, 0.6);
        // ratios: leader 2.0, follower 2.5 ≥ 2 + π
        let out = region_outcome(0, 1.0, 0.25, &s);
        assert_eq!(out.winner, Winner::Follower);
        assert!((out.x2_inf - 0.6).abs() < 1e-15);
        assert_eq!(out.x1_inf, 0.0);
    }

    #[test]
    fn barrier_gap_leaves_region_unserved() {
        // Follower ratio strictly between leader ratio and leader ratio + π.
        let s =
            Scenario::new(1, vec![1.0], vec![1.0], vec![0.5], vec![0.5], 0.3, 5.0, 5.0).unwrap();
        let out = region_outcome(0, 1.0, 1.05, &s);
        assert_eq!(out.winner, Winner::Nobody);
    }

    #[test]
    fn leader_wins_exact_ties() {
        let s = Scenario::new(
            1,
            vec![1.0],
            vec![1.0],
            vec![0.5],
            vec![0.5],
            1e-6,
            5.0,
            5.0,
        )
        .unwrap();
        let out = region_outcome(0, 1.0, 1.0, &s);
        assert_eq!(out.winner, Winner::Leader);
    }

    #[test]
    fn single_region_leader_utility() {
        let s = five_regions(0.6, 0.6);
        let g1 = [1.0, 0.0, 0.0, 0.0, 0.0];
        let g2 = [0.0; 5];
        assert!((leader_utility(&g1, &g2, &s) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_allocations_earn_nothing() {
        let s = five_regions(0.6, 0.6);
        let zero = [0.0; 5];
        assert_eq!(leader_utility(&zero, &zero, &s), 0.0);
        assert_eq!(follower_utility(&zero, &zero, &s), 0.0);
    }

    #[test]
    fn follower_interior_split_utility_matches_closed_form() {
        let s = five_regions(0.6, 0.6);
        let g1 = [0.0; 5];
        // Proportional-to-sqrt(p·δ) split of 0.6 over regions 1 and 2.
        let w1 = (2.0f64 * 0.1).sqrt();
        let w2 = (3.0f64 * 0.2).sqrt();
        let g2 = [0.6 * w1 / (w1 + w2), 0.6 * w2 / (w1 + w2), 0.0, 0.0, 0.0];
        let expected = 5.0 - (w1 + w2).powi(2) / 0.6;
        assert!((follower_utility(&g2, &g1, &s) - expected).abs() < 1e-12);
        assert!((expected - 2.5120).abs() < 1e-3);
    }

    #[test]
    fn allocation_validation() {
        assert!(AllocationVector::new(vec![0.1, 0.2]).is_ok());
        assert!(matches!(
            AllocationVector::new(vec![0.1, -0.2]),
            Err(AllocationError::NegativeEntry { index: 1, .. })
        ));
        let a = AllocationVector::new(vec![0.3, 0.31]).unwrap();
        assert!(matches!(
            a.check_budget(0.6, 2),
            Err(AllocationError::BudgetExceeded { .. })
        ));
        assert!(a.check_budget(0.61, 2).is_ok());
        assert!(matches!(
            a.check_budget(1.0, 3),
            Err(AllocationError::LengthMismatch {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn scenario_json_round_trip_and_field_names() {
        let s = five_regions(0.6, 5.0);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"K\":5"));
        assert!(json.contains("\"B1\":0.6"));
        let back: Scenario = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn invalid_json_scenario_fails_validation() {
        let json = r#"{"K":1,"p1":[1],"p2":[1],"delta1":[0],"delta2":[1],"pi":1e-6,"B1":1,"B2":1}"#;
        let err = serde_json::from_str::<Scenario>(json).unwrap_err();
        assert!(err.to_string().contains("churn"));
    }
}
