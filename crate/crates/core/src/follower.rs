//! Exact follower best response.
//!
//! For a fixed leader allocation the follower's problem decomposes over the
//! choice of a winning set `K2` (regions it captures) and, inside it, an
//! interior set `K̃2` (regions funded above the entry cost). Boundary regions
//! `K2 \ K̃2` get exactly the entry cost; interior regions share the residual
//! budget proportionally to `√(p·δ)`, the stationarity condition of the
//! budget-constrained concave program. Enumerating all `(K2, K̃2)` pairs —
//! at most `3^K` — and keeping the best value is therefore an exact solver.
//!
//! Ties are kept: the caller selects among maximizers pessimistically or
//! optimistically with respect to the leader's revenue.

use crate::model::{
    leader_utility, AllocationVector, BrSelection, Firm, Scenario, BUDGET_TOL, STRICT_TOL,
    VALUE_TIE_TOL,
};
use crate::regions::RegionSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One follower best response: winning set, interior set, the allocation
/// realizing it, its utility, and the dual value of the budget constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerSolution {
    pub winning_set: RegionSet,
    pub interior_set: RegionSet,
    pub allocation: AllocationVector,
    pub utility: f64,
    /// Budget-constraint multiplier. Interior spends satisfy
    /// `γ_k·√λ = √(p_k·δ_k)`. With no interior region the value reported is
    /// the largest one consistent with stationarity, `min_k p_k·δ_k/γ_k²`
    /// over the winning set (0 for the empty bundle).
    pub lambda: f64,
}

/// Minimal spend that lets the follower capture region `k`:
/// `δ2k · max(γ1k/δ1k + π, 1)`.
pub fn entry_cost(k: usize, gamma1_k: f64, s: &Scenario) -> f64 {
    debug_assert!(gamma1_k >= 0.0);
    s.churn(Firm::Follower, k) * (s.ratio(Firm::Leader, k, gamma1_k) + s.pi()).max(1.0)
}

/// Whether the cheapest way of winning every region in `k2` fits in the
/// follower's budget.
pub fn bundle_feasible(k2: RegionSet, gamma1: &[f64], s: &Scenario) -> bool {
    let total: f64 = k2.iter().map(|k| entry_cost(k, gamma1[k], s)).sum();
    total <= s.budget(Firm::Follower) + BUDGET_TOL
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InteriorError {
    /// Some interior spend fails to strictly exceed its entry cost, or no
    /// residual budget is left for the interior regions.
    #[error("interior allocation infeasible for this (K2, K~2) pair")]
    Infeasible,
    /// `K̃2 = ∅` while the boundary costs leave budget unspent; a positive
    /// budget multiplier forces full spend, so such pairs are rejected.
    #[error("empty interior set with residual budget")]
    EmptyInteriorWithResidual,
}

/// Per-region quantities of the follower problem at a fixed leader
/// allocation: entry costs, `√(p·δ)` weights, and the revenue earned by a
/// region held exactly at its entry cost.
struct BrContext {
    b2: f64,
    costs: Vec<f64>,
    weights: Vec<f64>,
    revenues: Vec<f64>,
    boundary_gain: Vec<f64>,
    /// Regions worth contesting at all (`p2k > 0`).
    searchable: RegionSet,
}

impl BrContext {
    fn new(gamma1: &[f64], s: &Scenario) -> Self {
        let count = s.region_count();
        assert_eq!(gamma1.len(), count);
        let mut costs = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        let mut revenues = Vec::with_capacity(count);
        let mut boundary_gain = Vec::with_capacity(count);
        let mut searchable = RegionSet::EMPTY;
        for (k, &g1k) in gamma1.iter().enumerate() {
            let bar = (s.ratio(Firm::Leader, k, g1k) + s.pi()).max(1.0);
            let p = s.revenue(Firm::Follower, k);
            costs.push(s.churn(Firm::Follower, k) * bar);
            weights.push((p * s.churn(Firm::Follower, k)).sqrt());
            revenues.push(p);
            boundary_gain.push(p * (1.0 - 1.0 / bar));
            if p > 0.0 {
                searchable = searchable.with(k);
            }
        }
        BrContext {
            b2: s.budget(Firm::Follower),
            costs,
            weights,
            revenues,
            boundary_gain,
            searchable,
        }
    }

    fn bundle_cost(&self, k2: RegionSet) -> f64 {
        k2.iter().map(|k| self.costs[k]).sum()
    }

    /// Closed-form value of a `(K2, K̃2)` pair, or the reason it is ruled out.
    fn value(&self, k2: RegionSet, kt2: RegionSet) -> Result<f64, InteriorError> {
        let mut value = 0.0;
        let mut boundary_sum = 0.0;
        for k in k2.iter() {
            if !kt2.contains(k) {
                value += self.boundary_gain[k];
                boundary_sum += self.costs[k];
            }
        }
        let residual = self.b2 - boundary_sum;
        if kt2.is_empty() {
            if residual > BUDGET_TOL {
                return Err(InteriorError::EmptyInteriorWithResidual);
            }
            if residual < -BUDGET_TOL {
                return Err(InteriorError::Infeasible);
            }
            return Ok(value);
        }
        if residual <= 0.0 {
            return Err(InteriorError::Infeasible);
        }
        let weight_sum: f64 = kt2.iter().map(|k| self.weights[k]).sum();
        if weight_sum <= 0.0 {
            return Err(InteriorError::Infeasible);
        }
        let per_weight = residual / weight_sum;
        for k in kt2.iter() {
            if self.weights[k] * per_weight < self.costs[k] + STRICT_TOL {
                return Err(InteriorError::Infeasible);
            }
            value += self.revenues[k] - self.weights[k] / per_weight;
        }
        Ok(value)
    }

    /// The allocation realizing a feasible `(K2, K̃2)` pair.
    fn allocation(&self, k2: RegionSet, kt2: RegionSet) -> AllocationVector {
        let mut values = vec![0.0; self.costs.len()];
        let mut boundary_sum = 0.0;
        for k in k2.iter() {
            if !kt2.contains(k) {
                values[k] = self.costs[k];
                boundary_sum += self.costs[k];
            }
        }
        if !kt2.is_empty() {
            let residual = self.b2 - boundary_sum;
            let weight_sum: f64 = kt2.iter().map(|k| self.weights[k]).sum();
            for k in kt2.iter() {
                values[k] = self.weights[k] * residual / weight_sum;
            }
        }
        AllocationVector::from(values)
    }

    fn lambda(&self, k2: RegionSet, kt2: RegionSet, allocation: &AllocationVector) -> f64 {
        if let Some(k) = kt2.iter().next() {
            let root = self.weights[k] / allocation[k];
            return root * root;
        }
        let lambda = k2
            .iter()
            .map(|k| {
                let w = self.weights[k];
                w * w / (allocation[k] * allocation[k])
            })
            .fold(f64::INFINITY, f64::min);
        if lambda.is_finite() {
            lambda
        } else {
            0.0
        }
    }

    fn for_each_candidate(&self, mut visit: impl FnMut(RegionSet, RegionSet, f64)) {
        for k2 in self.searchable.subsets() {
            if k2.is_empty() {
                continue;
            }
            if self.bundle_cost(k2) > self.b2 + BUDGET_TOL {
                continue;
            }
            for kt2 in k2.subsets() {
                if let Ok(value) = self.value(k2, kt2) {
                    visit(k2, kt2, value);
                }
            }
        }
    }
}

/// Candidate allocation for a `(K2, K̃2)` pair: entry costs on the boundary
/// regions, a `√(p·δ)`-proportional split of the residual on the interior.
pub fn interior_allocation(
    k2: RegionSet,
    k_tilde2: RegionSet,
    gamma1: &[f64],
    s: &Scenario,
) -> Result<AllocationVector, InteriorError> {
    debug_assert!(k_tilde2.is_subset_of(k2));
    let ctx = BrContext::new(gamma1, s);
    ctx.value(k2, k_tilde2)?;
    Ok(ctx.allocation(k2, k_tilde2))
}

/// Closed-form value of a `(K2, K̃2)` pair: boundary regions contribute
/// `p·(1 − 1/max(γ1/δ1 + π, 1))`, interior regions `p − √(p·δ)·W/R` with
/// `W` the interior weight sum and `R` the residual budget.
pub fn bundle_value(
    k2: RegionSet,
    k_tilde2: RegionSet,
    gamma1: &[f64],
    s: &Scenario,
) -> Result<f64, InteriorError> {
    debug_assert!(k_tilde2.is_subset_of(k2));
    BrContext::new(gamma1, s).value(k2, k_tilde2)
}

/// All follower best responses against `gamma1`: every `(K2, K̃2)` candidate
/// whose value ties the maximum within [`VALUE_TIE_TOL`]. The empty bundle
/// (spend nothing, earn 0) is always a candidate, so the result is never
/// empty. Regions with `p2k = 0` are never part of a winning set: they can
/// only waste budget.
pub fn best_response_set(gamma1: &[f64], s: &Scenario) -> Vec<FollowerSolution> {
    let ctx = BrContext::new(gamma1, s);

    let mut best = 0.0f64;
    ctx.for_each_candidate(|_, _, value| {
        if value > best {
            best = value;
        }
    });

    let mut maximizers = Vec::new();
    if 0.0 >= best - VALUE_TIE_TOL {
        maximizers.push(FollowerSolution {
            winning_set: RegionSet::EMPTY,
            interior_set: RegionSet::EMPTY,
            allocation: AllocationVector::zeros(s.region_count()),
            utility: 0.0,
            lambda: 0.0,
        });
    }
    ctx.for_each_candidate(|k2, kt2, value| {
        if value >= best - VALUE_TIE_TOL {
            let allocation = ctx.allocation(k2, kt2);
            let lambda = ctx.lambda(k2, kt2, &allocation);
            maximizers.push(FollowerSolution {
                winning_set: k2,
                interior_set: kt2,
                allocation,
                utility: value,
                lambda,
            });
        }
    });
    maximizers
}

/// Picks one maximizer: the one minimizing (pessimistic) or maximizing
/// (optimistic) the leader's revenue, ties broken by smallest winning-set
/// bitmask, then smallest interior-set bitmask.
pub fn select_br<'a>(
    brset: &'a [FollowerSolution],
    selection: BrSelection,
    gamma1: &[f64],
    s: &Scenario,
) -> &'a FollowerSolution {
    assert!(!brset.is_empty(), "best-response set is never empty");
    let mut chosen = &brset[0];
    let mut chosen_u1 = leader_utility(gamma1, &chosen.allocation, s);
    for sol in &brset[1..] {
        let u1 = leader_utility(gamma1, &sol.allocation, s);
        let better = match selection {
            BrSelection::Pessimistic => u1 < chosen_u1,
            BrSelection::Optimistic => u1 > chosen_u1,
        };
        let tied = u1 == chosen_u1
            && (sol.winning_set, sol.interior_set) < (chosen.winning_set, chosen.interior_set);
        if better || tied {
            chosen = sol;
            chosen_u1 = u1;
        }
    }
    chosen
}

/// Convenience: enumerate and select in one call.
pub fn best_response(gamma1: &[f64], s: &Scenario, selection: BrSelection) -> FollowerSolution {
    select_br(&best_response_set(gamma1, s), selection, gamma1, s).clone()
}
