//! Brute-force grid oracles.
//!
//! Ground truth for validating the closed-form solvers at small `K`:
//! allocations are restricted to multiples of a step size, the whole
//! `≤ budget` simplex is enumerated (winner classification is not monotone
//! in the loser's spend, so the interior matters, not just the full-budget
//! face), and optima are found by exhaustion.
//!
//! The follower oracle is a plain scan. The bilevel oracle scans every
//! leader grid point; its inner follower problem is solved exactly on the
//! grid by enumerating winning sets and filling units greedily — revenue per
//! region is concave in the spend above the entry threshold, so the greedy
//! split is the exact grid optimum (cross-checked against a literal
//! double scan in the test suite).

use crate::model::{follower_utility, region_outcome, AllocationVector, Firm, Scenario, Winner};
use crate::regions::RegionSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Step size and enumeration cap of one grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Spacing between admissible spends, in budget units.
    pub step: f64,
    /// Refuse enumerations larger than this.
    pub max_points: u64,
}

pub const DEFAULT_MAX_POINTS: u64 = 50_000_000;

impl GridSpec {
    pub fn new(step: f64) -> Self {
        GridSpec {
            step,
            max_points: DEFAULT_MAX_POINTS,
        }
    }

    pub fn with_max_points(step: f64, max_points: u64) -> Self {
        GridSpec { step, max_points }
    }

    fn units(&self, budget: f64) -> u32 {
        ((budget / self.step) + 1e-9).floor() as u32
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid step must be positive and finite")]
    InvalidStep,
    #[error("grid has {points} points, above the cap {max_points}")]
    TooLarge { points: u128, max_points: u64 },
}

/// `C(n+k, k)`, saturating at `u128::MAX`: the number of nonnegative integer
/// `k`-vectors summing to at most `n`.
pub fn grid_point_count(budget: f64, k: usize, step: f64) -> u128 {
    let n = ((budget / step) + 1e-9).floor() as u128;
    binomial(n + k as u128, k as u128)
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut result: u128 = 1;
    for i in 1..=k {
        let factor = n - k + i;
        match result.checked_mul(factor) {
            Some(x) => result = x / i,
            None => return u128::MAX,
        }
    }
    result
}

fn check_size(budget: f64, k: usize, grid: &GridSpec) -> Result<(), GridError> {
    if grid.step <= 0.0 || !grid.step.is_finite() {
        return Err(GridError::InvalidStep);
    }
    let points = grid_point_count(budget, k, grid.step);
    if points > grid.max_points as u128 {
        return Err(GridError::TooLarge {
            points,
            max_points: grid.max_points,
        });
    }
    Ok(())
}

/// All `k`-vectors with entries in `{0, step, 2·step, …}` summing to at most
/// `budget`, in lexicographic order. Includes the zero vector.
pub fn grid_allocations(
    budget: f64,
    k: usize,
    grid: &GridSpec,
) -> Result<impl Iterator<Item = AllocationVector>, GridError> {
    assert!(k >= 1);
    check_size(budget, k, grid)?;
    let n = grid.units(budget);
    let step = grid.step;
    let mut units = vec![0u32; k];
    let mut done = false;
    Ok(std::iter::from_fn(move || {
        if done {
            return None;
        }
        let current =
            AllocationVector::from(units.iter().map(|&u| u as f64 * step).collect::<Vec<_>>());
        // Odometer: bump the last coordinate that still has budget headroom.
        let mut total: u32 = units.iter().sum();
        let mut pos = k;
        loop {
            if pos == 0 {
                done = true;
                break;
            }
            pos -= 1;
            if total < n {
                units[pos] += 1;
                break;
            }
            total -= units[pos];
            units[pos] = 0;
        }
        Some(current)
    }))
}

/// Visits every unit vector of the `≤ n` simplex over `k` coordinates whose
/// first coordinate is `first`, in lexicographic order.
fn for_each_with_first(first: u32, k: usize, n: u32, visit: &mut impl FnMut(&[u32])) {
    let mut units = vec![0u32; k];
    units[0] = first;
    if k == 1 {
        visit(&units);
        return;
    }
    fn rec(units: &mut [u32], pos: usize, remaining: u32, visit: &mut impl FnMut(&[u32])) {
        if pos == units.len() - 1 {
            for j in 0..=remaining {
                units[pos] = j;
                visit(units);
            }
            units[pos] = 0;
            return;
        }
        for j in 0..=remaining {
            units[pos] = j;
            rec(units, pos + 1, remaining - j, visit);
        }
        units[pos] = 0;
    }
    rec(&mut units, 1, n - first, visit);
}

/// Exhaustive follower best response on the grid: the allocation maximizing
/// the follower's revenue against `gamma1`, ties resolved by enumeration
/// order. Returns the winner and its utility.
pub fn oracle_follower_br(
    gamma1: &[f64],
    s: &Scenario,
    grid: &GridSpec,
) -> Result<(AllocationVector, f64), GridError> {
    let k = s.region_count();
    let budget = s.budget(Firm::Follower);
    check_size(budget, k, grid)?;
    let n = grid.units(budget);
    let step = grid.step;

    let best = (0..=n)
        .into_par_iter()
        .map(|first| {
            let mut best_value = f64::NEG_INFINITY;
            let mut best_units: Vec<u32> = Vec::new();
            let mut best_index = 0u64;
            let mut index = 0u64;
            let mut scratch = vec![0.0f64; k];
            for_each_with_first(first, k, n, &mut |units| {
                for (x, &u) in scratch.iter_mut().zip(units) {
                    *x = u as f64 * step;
                }
                let value = follower_utility(&scratch, gamma1, s);
                if value > best_value {
                    best_value = value;
                    best_units = units.to_vec();
                    best_index = index;
                }
                index += 1;
            });
            (best_value, (first, best_index), best_units)
        })
        .reduce(
            || (f64::NEG_INFINITY, (u32::MAX, u64::MAX), Vec::new()),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );

    let values: Vec<f64> = best.2.iter().map(|&u| u as f64 * step).collect();
    Ok((AllocationVector::from(values), best.0))
}

/// Best leader grid point under the exact grid best response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEquilibrium {
    pub gamma1: AllocationVector,
    pub u1: f64,
}

/// Exhaustive bilevel search: for every leader grid point, solve the
/// follower's grid problem exactly, group the maximizing winning sets, apply
/// the mode's tie-break (worst or best leader revenue), and keep the leader
/// point with the highest resulting revenue (first in enumeration order on
/// ties).
pub fn oracle_stackelberg(
    s: &Scenario,
    grid: &GridSpec,
    mode: crate::model::SolutionMode,
) -> Result<OracleEquilibrium, GridError> {
    let k = s.region_count();
    check_size(s.budget(Firm::Leader), k, grid)?;
    check_size(s.budget(Firm::Follower), k, grid)?;
    let n1 = grid.units(s.budget(Firm::Leader));
    let n2 = grid.units(s.budget(Firm::Follower));
    let step = grid.step;
    let pessimistic = matches!(mode, crate::model::SolutionMode::Weak);

    let best = (0..=n1)
        .into_par_iter()
        .map(|first| {
            let mut best_value = f64::NEG_INFINITY;
            let mut best_units: Vec<u32> = Vec::new();
            let mut best_index = 0u64;
            let mut index = 0u64;
            let mut scratch = vec![0.0f64; k];
            for_each_with_first(first, k, n1, &mut |units| {
                for (x, &u) in scratch.iter_mut().zip(units) {
                    *x = u as f64 * step;
                }
                let value = grid_leader_value(&scratch, s, step, n2, pessimistic);
                if value > best_value {
                    best_value = value;
                    best_units = units.to_vec();
                    best_index = index;
                }
                index += 1;
            });
            (best_value, (first, best_index), best_units)
        })
        .reduce(
            || (f64::NEG_INFINITY, (u32::MAX, u64::MAX), Vec::new()),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );

    let values: Vec<f64> = best.2.iter().map(|&u| u as f64 * step).collect();
    Ok(OracleEquilibrium {
        gamma1: AllocationVector::from(values),
        u1: best.0,
    })
}

/// Leader revenue at one grid point once the follower answers with its exact
/// grid best response (selection per `pessimistic`).
fn grid_leader_value(gamma1: &[f64], s: &Scenario, step: f64, n2: u32, pessimistic: bool) -> f64 {
    let k = s.region_count();

    // Leader's per-region revenue if the follower stays out of the region.
    let mut solo_gain = vec![0.0f64; k];
    for (region, gain) in solo_gain.iter_mut().enumerate() {
        let out = region_outcome(region, gamma1[region], 0.0, s);
        if out.winner == Winner::Leader {
            *gain = s.revenue(Firm::Leader, region) * out.x1_inf;
        }
    }
    let u1_all: f64 = solo_gain.iter().sum();

    // Minimal units the follower needs to capture each region; `None` when
    // unreachable within its budget.
    let mut min_units = vec![None::<u32>; k];
    let mut contestable = RegionSet::EMPTY;
    for region in 0..k {
        if s.revenue(Firm::Follower, region) <= 0.0 {
            continue;
        }
        let cost = crate::follower::entry_cost(region, gamma1[region], s);
        let mut j = ((cost / step) - 1e-9).ceil().max(1.0) as u32;
        let wins = |j: u32| -> bool {
            j <= n2
                && region_outcome(region, gamma1[region], j as f64 * step, s).winner
                    == Winner::Follower
        };
        while j > 1 && wins(j - 1) {
            j -= 1;
        }
        while j <= n2 && !wins(j) {
            j += 1;
        }
        if j <= n2 {
            min_units[region] = Some(j);
            contestable = contestable.with(region);
        }
    }

    // Exact grid best response per winning set: mandatory units, then greedy
    // unit filling (concave gains), then exact tie grouping across sets.
    let mut best_u2 = 0.0f64;
    let mut selected_u1 = u1_all;
    let mut units = vec![0u32; k];
    for bundle in contestable.subsets() {
        if bundle.is_empty() {
            continue;
        }
        let mandatory: u32 = bundle.iter().map(|r| min_units[r].unwrap()).sum();
        if mandatory > n2 {
            continue;
        }
        for r in bundle.iter() {
            units[r] = min_units[r].unwrap();
        }
        let mut left = n2 - mandatory;
        while left > 0 {
            let mut best_region = usize::MAX;
            let mut best_gain = 0.0f64;
            for r in bundle.iter() {
                let j = units[r] as f64;
                let gain = s.revenue(Firm::Follower, r) * s.churn(Firm::Follower, r)
                    / (step * j * (j + 1.0));
                if gain > best_gain {
                    best_gain = gain;
                    best_region = r;
                }
            }
            if best_region == usize::MAX {
                break;
            }
            units[best_region] += 1;
            left -= 1;
        }
        let u2: f64 = bundle
            .iter()
            .map(|r| {
                s.revenue(Firm::Follower, r)
                    * (1.0 - s.churn(Firm::Follower, r) / (units[r] as f64 * step))
            })
            .sum();
        let u1_bundle: f64 = u1_all - bundle.iter().map(|r| solo_gain[r]).sum::<f64>();
        if u2 > best_u2 {
            best_u2 = u2;
            selected_u1 = u1_bundle;
        } else if u2 == best_u2 {
            selected_u1 = if pessimistic {
                selected_u1.min(u1_bundle)
            } else {
                selected_u1.max(u1_bundle)
            };
        }
    }
    selected_u1
}

/// Winner verdicts of a solver-vs-oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Comparison of a solver value against a grid optimum. The solver may beat
/// the grid (its feasible set is finer) but must never trail it by more than
/// the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub solver_value: f64,
    pub oracle_value: f64,
    /// `solver_value − oracle_value`.
    pub gap: f64,
    pub best_grid_point: AllocationVector,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl OracleReport {
    pub fn new(
        solver_value: f64,
        oracle_value: f64,
        best_grid_point: AllocationVector,
        tolerance: f64,
    ) -> Self {
        let gap = solver_value - oracle_value;
        OracleReport {
            solver_value,
            oracle_value,
            gap,
            best_grid_point,
            tolerance,
            verdict: if gap >= -tolerance {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(k: usize, p2: Vec<f64>, d2: Vec<f64>, b2: f64) -> Scenario {
        Scenario::new(k, vec![1.0; k], p2, vec![0.5; k], d2, 1e-6, 1.0, b2).unwrap()
    }

    #[test]
    fn two_region_grid_has_six_points() {
        let grid = GridSpec::new(0.1);
        let points: Vec<Vec<f64>> = grid_allocations(0.2, 2, &grid)
            .unwrap()
            .map(|a| a.values().to_vec())
            .collect();
        assert_eq!(points.len(), 6);
        assert_eq!(grid_point_count(0.2, 2, 0.1), 6);
        assert!(points.contains(&vec![0.0, 0.0]));
        assert!(points.contains(&vec![0.2, 0.0]));
        assert!(points.contains(&vec![0.1, 0.1]));
        assert!(points.contains(&vec![0.0, 0.2]));
    }

    #[test]
    fn zero_budget_grid_is_the_zero_vector() {
        let grid = GridSpec::new(0.1);
        let points: Vec<AllocationVector> = grid_allocations(0.0, 3, &grid).unwrap().collect();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn five_region_count_matches_stars_and_bars() {
        // 20 units over 5 coordinates, sum ≤ 20: C(25, 5).
        assert_eq!(grid_point_count(1.0, 5, 0.05), 53130);
        let grid = GridSpec::new(0.05);
        assert_eq!(grid_allocations(1.0, 5, &grid).unwrap().count(), 53130);
    }

    #[test]
    fn oversized_grid_is_refused() {
        let grid = GridSpec::with_max_points(0.001, 1000);
        match grid_allocations(1.0, 3, &grid) {
            Err(GridError::TooLarge { points, max_points }) => {
                assert!(points > 1000);
                assert_eq!(max_points, 1000);
            }
            _ => panic!("expected TooLarge"),
        }
    }

    #[test]
    fn single_region_follower_oracle_spends_everything() {
        let s = scenario(1, vec![2.0], vec![0.1], 1.0);
        let grid = GridSpec::new(0.05);
        let (alloc, utility) = oracle_follower_br(&[0.0], &s, &grid).unwrap();
        assert_eq!(alloc.values(), &[1.0]);
        assert!((utility - 1.8).abs() < 1e-12);
    }

    #[test]
    fn zero_budget_follower_oracle_returns_zero_vector() {
        let s = scenario(2, vec![1.0, 1.0], vec![0.2, 0.3], 0.0);
        let grid = GridSpec::new(0.05);
        let (alloc, utility) = oracle_follower_br(&[0.0, 0.0], &s, &grid).unwrap();
        assert_eq!(alloc.values(), &[0.0, 0.0]);
        assert_eq!(utility, 0.0);
    }

    #[test]
    fn refining_the_grid_never_lowers_the_optimum() {
        let s = scenario(2, vec![2.0, 3.0], vec![0.1, 0.2], 0.6);
        let coarse = GridSpec::new(0.1);
        let fine = GridSpec::new(0.05);
        let (_, coarse_u) = oracle_follower_br(&[0.0, 0.0], &s, &coarse).unwrap();
        let (_, fine_u) = oracle_follower_br(&[0.0, 0.0], &s, &fine).unwrap();
        assert!(fine_u >= coarse_u - 1e-15);
    }

    #[test]
    fn bilevel_oracle_zero_leader_budget_gives_zero_revenue() {
        let s = Scenario::new(
            2,
            vec![1.0, 2.0],
            vec![1.0, 1.0],
            vec![0.2, 0.4],
            vec![0.3, 0.2],
            1e-6,
            0.0,
            1.0,
        )
        .unwrap();
        let grid = GridSpec::new(0.05);
        let eq = oracle_stackelberg(&s, &grid, crate::model::SolutionMode::Weak).unwrap();
        assert_eq!(eq.u1, 0.0);
    }

    #[test]
    fn report_verdict_is_one_sided() {
        let point = AllocationVector::from(vec![0.0]);
        assert!(OracleReport::new(1.0, 0.9, point.clone(), 1e-3).passed());
        assert!(OracleReport::new(0.9, 0.9005, point.clone(), 1e-3).passed());
        assert!(!OracleReport::new(0.9, 1.0, point, 1e-3).passed());
    }
}
