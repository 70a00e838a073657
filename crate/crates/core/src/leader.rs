//! Leader-side bilevel solver.
//!
//! The leader commits to a winning set `K1` and an allocation that deters the
//! follower's best response from every region of `K1`. For each of the `2^K`
//! candidate sets the inner problem — maximize `Σ_{k∈K1} p1k(1 − δ1k/γ1k)`
//! over allocations the follower will not contest — is concave; the outer
//! loop keeps the best set.
//!
//! The inner solver works in two phases. A lower-bounded waterfilling
//! candidate (`γ ∝ √(p·δ)`, floored at `γ ≥ δ`) maximizes the relaxation that
//! ignores the follower, so if it happens to deter the follower it is optimal
//! outright. Otherwise contested regions get their spend raised to a
//! deterrence threshold found by bisection (entry costs are monotone in the
//! leader's spend), the remaining budget is re-waterfilled, and the loop runs
//! to a fixed point; a pairwise budget-transfer ascent then polishes the
//! allocation under explicit membership checks.

use crate::follower::{best_response, FollowerSolution};
use crate::model::{
    follower_utility, leader_utility, AllocationVector, Firm, Scenario, SolutionMode, BUDGET_TOL,
    RATIO_TOL,
};
use crate::regions::RegionSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allocations and equilibrium utilities of one solved game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackelbergOutcome {
    pub mode: SolutionMode,
    /// Leader's winning set.
    pub k1: RegionSet,
    pub gamma1: AllocationVector,
    pub u1: f64,
    /// Follower's winning set in its selected best response.
    pub k2: RegionSet,
    pub gamma2: AllocationVector,
    pub u2: f64,
    /// Inner-problem value reached for every candidate `K1`, in increasing
    /// bitmask order; infeasible sets carry the sentinel −1.
    pub per_subset_values: Vec<SubsetValue>,
    /// Set when the closed-form equilibrium reply disagrees with the general
    /// best-response solver beyond [`REPLY_TOL`]; never silently dropped.
    pub reply_disagreement: Option<ReplyDisagreement>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetValue {
    pub k1: RegionSet,
    pub value: f64,
}

/// Sentinel stored in [`StackelbergOutcome::per_subset_values`] for
/// infeasible leader sets.
pub const INFEASIBLE_SENTINEL: f64 = -1.0;

/// Agreement tolerance between the closed-form equilibrium reply and the
/// general best-response solver.
pub const REPLY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error(
    "closed-form equilibrium reply (set {closed_form_set}, utility {closed_form_utility}) \
     disagrees with the general best response (set {general_set}, utility {general_utility})"
)]
pub struct ReplyDisagreement {
    pub closed_form_set: RegionSet,
    pub closed_form_utility: f64,
    pub general_set: RegionSet,
    pub general_utility: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("scenario has {regions} regions, above the configured limit {limit}")]
    RegionLimitExceeded { regions: usize, limit: usize },
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Target precision of inner-problem values.
    pub tol: f64,
    /// Refuse scenarios with more regions than this; the subset enumeration
    /// grows as `2^K` with a `3^K` best response inside.
    pub region_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-6,
            region_limit: 16,
        }
    }
}

/// Result of one inner problem.
#[derive(Debug, Clone, PartialEq)]
pub enum SubproblemOutcome {
    Feasible {
        gamma1: AllocationVector,
        value: f64,
    },
    Infeasible,
}

/// Whether `gamma1` lets the leader keep every region of `k1` once the
/// follower plays its selected best response: inside `k1` the leader's ratio
/// must clear both the follower's ratio and 1; outside it must stay below
/// `max(follower ratio − π, 1)`.
pub fn membership_gamma_hat(
    k1: RegionSet,
    gamma1: &[f64],
    s: &Scenario,
    mode: SolutionMode,
) -> bool {
    let reply = best_response(gamma1, s, mode.selection());
    membership_against(k1, gamma1, &reply, s)
}

fn membership_against(
    k1: RegionSet,
    gamma1: &[f64],
    reply: &FollowerSolution,
    s: &Scenario,
) -> bool {
    for (k, &g1k) in gamma1.iter().enumerate() {
        let r1 = s.ratio(Firm::Leader, k, g1k);
        let r2 = s.ratio(Firm::Follower, k, reply.allocation[k]);
        if k1.contains(k) {
            if r1 < r2.max(1.0) - RATIO_TOL {
                return false;
            }
        } else if r1 > (r2 - s.pi()).max(1.0) + RATIO_TOL {
            return false;
        }
    }
    true
}

/// Waterfilling over the members of `k1` with per-region lower bounds:
/// `γ_k = max(L_k, w_k·t)` with `t` chosen so the budget is spent exactly.
/// Weights are `√(p1·δ1)`. Returns `None` when the bounds alone exceed the
/// budget.
fn waterfill_lower_bounded(k1: RegionSet, bounds: &[f64], s: &Scenario) -> Option<Vec<f64>> {
    let budget = s.budget(Firm::Leader);
    let members: Vec<usize> = k1.iter().collect();
    let lower_sum: f64 = members.iter().map(|&k| bounds[k]).sum();
    if lower_sum > budget + BUDGET_TOL {
        return None;
    }
    let mut values = vec![0.0; s.region_count()];
    let weights: Vec<f64> = members
        .iter()
        .map(|&k| (s.revenue(Firm::Leader, k) * s.churn(Firm::Leader, k)).sqrt())
        .collect();
    let weight_sum: f64 = weights.iter().sum();
    let slack = budget - lower_sum;
    if weight_sum <= 0.0 || slack <= 0.0 {
        // Nothing to waterfill: spread any slack evenly (revenue weights are
        // all zero, so placement is value-neutral; extra spend only hardens
        // deterrence).
        let extra = slack.max(0.0) / members.len() as f64;
        for &k in &members {
            values[k] = bounds[k] + extra;
        }
        return Some(values);
    }

    // Monotone in t: Σ_k max(L_k, w_k t) grows from Σ L to ∞.
    let spend = |t: f64| -> f64 {
        members
            .iter()
            .zip(&weights)
            .map(|(&k, &w)| (w * t).max(bounds[k]))
            .sum()
    };
    let mut lo = 0.0f64;
    let mut hi = budget / weight_sum.min(f64::MAX) + 1.0;
    while spend(hi) < budget {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spend(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    // Exact full spend: pin the bounded coordinates, share the rest in
    // closed form among the free ones.
    let free: Vec<usize> = (0..members.len())
        .filter(|&i| weights[i] * t > bounds[members[i]])
        .collect();
    if free.is_empty() {
        for &k in &members {
            values[k] = bounds[k];
        }
        return Some(values);
    }
    let pinned_sum: f64 = (0..members.len())
        .filter(|i| !free.contains(i))
        .map(|i| bounds[members[i]])
        .sum();
    let free_weight: f64 = free.iter().map(|&i| weights[i]).sum();
    let residual = budget - pinned_sum;
    for &k in &members {
        values[k] = bounds[k];
    }
    for &i in &free {
        values[members[i]] = (weights[i] * residual / free_weight).max(bounds[members[i]]);
    }
    Some(values)
}

/// Revenue the leader books on `k1` under `values`.
fn k1_value(k1: RegionSet, values: &[f64], s: &Scenario) -> f64 {
    k1.iter()
        .map(|k| s.revenue(Firm::Leader, k) * (1.0 - s.churn(Firm::Leader, k) / values[k]).max(0.0))
        .sum()
}

/// Regions of `k1` the follower's selected best response takes away.
fn contested_regions(k1: RegionSet, values: &[f64], s: &Scenario, mode: SolutionMode) -> RegionSet {
    let reply = best_response(values, s, mode.selection());
    reply.winning_set.intersection(k1)
}

/// Smallest spend on region `k` (others fixed) that removes `k` from the
/// follower's selected best response. Entry costs rise with the leader's
/// spend, so the predicate is monotone and bisection applies.
fn deterrence_threshold(
    k: usize,
    base: &[f64],
    k1: RegionSet,
    s: &Scenario,
    mode: SolutionMode,
    hi: f64,
) -> Option<f64> {
    let deterred = |g: f64| -> bool {
        let mut trial = base.to_vec();
        trial[k] = g;
        !contested_regions(k1, &trial, s, mode).contains(k)
    };
    let mut lo = base[k];
    if deterred(lo) {
        return Some(lo);
    }
    if !deterred(hi) {
        return None;
    }
    let mut hi = hi;
    for _ in 0..80 {
        if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if deterred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

const MAX_DETERRENCE_ROUNDS: usize = 120;

/// Inner problem for a fixed leader set: maximize the leader's revenue on
/// `k1` over allocations certified by [`membership_gamma_hat`]. Spends
/// nothing outside `k1` (out-of-set spend never earns and the out-of-set
/// constraint holds at zero).
pub fn leader_subproblem(
    k1: RegionSet,
    s: &Scenario,
    mode: SolutionMode,
    tol: f64,
) -> SubproblemOutcome {
    let count = s.region_count();
    if k1.is_empty() {
        return SubproblemOutcome::Feasible {
            gamma1: AllocationVector::zeros(count),
            value: 0.0,
        };
    }
    // Ratios must reach 1, so each member needs at least its churn rate.
    let mut bounds = vec![0.0; count];
    for k in k1.iter() {
        bounds[k] = s.churn(Firm::Leader, k);
    }

    for _ in 0..MAX_DETERRENCE_ROUNDS {
        let Some(values) = waterfill_lower_bounded(k1, &bounds, s) else {
            return SubproblemOutcome::Infeasible;
        };
        let contested = contested_regions(k1, &values, s, mode);
        if contested.is_empty() {
            let refined = refine_allocation(k1, values, s, mode, tol);
            let value = k1_value(k1, &refined, s);
            return SubproblemOutcome::Feasible {
                gamma1: AllocationVector::from(refined),
                value,
            };
        }
        let bound_sum: f64 = k1.iter().map(|k| bounds[k]).sum();
        for k in contested.iter() {
            let hi = s.budget(Firm::Leader) - (bound_sum - bounds[k]);
            if hi <= values[k] {
                return SubproblemOutcome::Infeasible;
            }
            match deterrence_threshold(k, &values, k1, s, mode, hi) {
                Some(threshold) => bounds[k] = bounds[k].max(threshold),
                None => return SubproblemOutcome::Infeasible,
            }
        }
    }
    // No fixed point within the round budget; treat as infeasible rather
    // than return an uncertified allocation.
    SubproblemOutcome::Infeasible
}

/// Pairwise budget-transfer ascent on the full-budget face, accepting only
/// moves that keep the membership certificate. Corrects the conservatism of
/// thresholds found while other coordinates still sat at waterfill levels.
fn refine_allocation(
    k1: RegionSet,
    mut values: Vec<f64>,
    s: &Scenario,
    mode: SolutionMode,
    tol: f64,
) -> Vec<f64> {
    if k1.len() < 2 {
        return values;
    }
    let members: Vec<usize> = k1.iter().collect();
    let mut value = k1_value(k1, &values, s);
    let budget = s.budget(Firm::Leader);
    for &frac in &[0.05, 0.02, 0.008, 0.003, 0.001, 0.0004] {
        let step = frac * budget;
        if step < tol * 0.1 {
            break;
        }
        for _pass in 0..24 {
            let mut improved = false;
            for &receiver in &members {
                for &donor in &members {
                    if donor == receiver {
                        continue;
                    }
                    if values[donor] - step < s.churn(Firm::Leader, donor) {
                        continue;
                    }
                    let mut trial = values.clone();
                    trial[receiver] += step;
                    trial[donor] -= step;
                    let trial_value = k1_value(k1, &trial, s);
                    if trial_value > value + 1e-12
                        && contested_regions(k1, &trial, s, mode).is_empty()
                    {
                        values = trial;
                        value = trial_value;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
    values
}

/// Equilibrium reply in closed form: among sets disjoint from the leader's,
/// the follower takes the one maximizing
/// `Σ_k p2k(1 − √(δ2k/p2k)·Σ_ℓ √(p2ℓδ2ℓ)/B2)` and splits its whole budget
/// proportionally to `√(p·δ)`. Assumes an all-interior optimum; use
/// [`follower_equilibrium_reply_checked`] to detect when that assumption
/// breaks.
pub fn follower_equilibrium_reply(k1: RegionSet, s: &Scenario) -> (RegionSet, AllocationVector) {
    let count = s.region_count();
    let b2 = s.budget(Firm::Follower);
    if b2 <= 0.0 {
        return (RegionSet::EMPTY, AllocationVector::zeros(count));
    }
    let available = RegionSet::from_indices(
        &(0..count)
            .filter(|&k| !k1.contains(k) && s.revenue(Firm::Follower, k) > 0.0)
            .collect::<Vec<_>>(),
    );
    let weight = |k: usize| (s.revenue(Firm::Follower, k) * s.churn(Firm::Follower, k)).sqrt();
    let mut best_set = RegionSet::EMPTY;
    let mut best_value = 0.0f64;
    for k2 in available.subsets() {
        if k2.is_empty() {
            continue;
        }
        let weight_sum: f64 = k2.iter().map(weight).sum();
        let value: f64 = k2
            .iter()
            .map(|k| s.revenue(Firm::Follower, k) - weight(k) * weight_sum / b2)
            .sum();
        if value > best_value {
            best_value = value;
            best_set = k2;
        }
    }
    let mut alloc = vec![0.0; count];
    if !best_set.is_empty() {
        let weight_sum: f64 = best_set.iter().map(weight).sum();
        for k in best_set.iter() {
            alloc[k] = weight(k) * b2 / weight_sum;
        }
    }
    (best_set, AllocationVector::from(alloc))
}

/// Closed-form reply cross-checked against the general best-response solver
/// at the solved leader allocation. Utilities must agree within
/// [`REPLY_TOL`]; a [`ReplyDisagreement`] signals that the all-interior
/// assumption behind the closed form does not hold there.
pub fn follower_equilibrium_reply_checked(
    k1: RegionSet,
    gamma1: &[f64],
    s: &Scenario,
    mode: SolutionMode,
) -> Result<(RegionSet, AllocationVector), ReplyDisagreement> {
    let (set, alloc) = follower_equilibrium_reply(k1, s);
    let closed_form_utility = follower_utility(&alloc, gamma1, s);
    let general = best_response(gamma1, s, mode.selection());
    if (closed_form_utility - general.utility).abs() <= REPLY_TOL {
        Ok((set, alloc))
    } else {
        Err(ReplyDisagreement {
            closed_form_set: set,
            closed_form_utility,
            general_set: general.winning_set,
            general_utility: general.utility,
        })
    }
}

/// Full bilevel solve: enumerate every leader set, keep the best inner
/// value (ties to the smallest bitmask), and attach the follower's selected
/// best response at the winning allocation. Never fails on valid scenarios —
/// the empty set with zero spend is always feasible.
pub fn solve_stackelberg(
    s: &Scenario,
    mode: SolutionMode,
    options: &SolveOptions,
) -> Result<StackelbergOutcome, SolveError> {
    let count = s.region_count();
    if count > options.region_limit {
        return Err(SolveError::RegionLimitExceeded {
            regions: count,
            limit: options.region_limit,
        });
    }

    let masks: Vec<u32> = (0..(1u32 << count)).collect();
    let solved: Vec<(RegionSet, SubproblemOutcome)> = masks
        .par_iter()
        .map(|&mask| {
            let k1 = RegionSet(mask);
            (k1, leader_subproblem(k1, s, mode, options.tol))
        })
        .collect();

    let per_subset_values: Vec<SubsetValue> = solved
        .iter()
        .map(|(k1, outcome)| SubsetValue {
            k1: *k1,
            value: match outcome {
                SubproblemOutcome::Feasible { value, .. } => *value,
                SubproblemOutcome::Infeasible => INFEASIBLE_SENTINEL,
            },
        })
        .collect();

    let (best_k1, best_gamma1, _) = solved
        .iter()
        .filter_map(|(k1, outcome)| match outcome {
            SubproblemOutcome::Feasible { gamma1, value } => Some((*k1, gamma1, *value)),
            SubproblemOutcome::Infeasible => None,
        })
        .fold(
            (
                RegionSet::EMPTY,
                None::<&AllocationVector>,
                f64::NEG_INFINITY,
            ),
            |best, (k1, gamma1, value)| {
                if value > best.2 {
                    (k1, Some(gamma1), value)
                } else {
                    best
                }
            },
        );
    let gamma1 = best_gamma1
        .cloned()
        .unwrap_or_else(|| AllocationVector::zeros(count));

    let reply = best_response(&gamma1, s, mode.selection());
    let u1 = leader_utility(&gamma1, &reply.allocation, s);
    let u2 = follower_utility(&reply.allocation, &gamma1, s);

    let reply_disagreement = follower_equilibrium_reply_checked(best_k1, &gamma1, s, mode).err();

    Ok(StackelbergOutcome {
        mode,
        k1: best_k1,
        gamma1,
        u1,
        k2: reply.winning_set,
        gamma2: reply.allocation,
        u2,
        per_subset_values,
        reply_disagreement,
    })
}
