//! Solver library for a two-firm, multi-region, winner-takes-all
//! budget-allocation game.
//!
//! A leader and a follower split advertising budgets across `K` regions.
//! Each region goes entirely to the firm whose spread-to-churn ratio clears
//! the bar; the follower additionally faces an entry barrier `π`. The crate
//! provides:
//!
//! - [`model`]: scenario data, the per-region steady-state map, and both
//!   firms' revenues;
//! - [`follower`]: the follower's exact best response via winning-set
//!   enumeration and closed-form interior allocations;
//! - [`leader`]: weak (pessimistic) and strong (optimistic) Stackelberg
//!   solutions via subset enumeration with a concave inner solver;
//! - [`oracle`]: brute-force grid searches validating both solvers;
//! - [`sis`]: adoption-dynamics integration checking the steady-state model;
//! - [`sweep`]: deterministic budget sweeps, CSV output, and the claims
//!   report.

pub mod follower;
pub mod leader;
pub mod model;
pub mod oracle;
pub mod regions;
pub mod sis;
pub mod sweep;

pub use follower::{
    best_response, best_response_set, bundle_feasible, bundle_value, entry_cost,
    interior_allocation, select_br, FollowerSolution, InteriorError,
};
pub use leader::{
    follower_equilibrium_reply, follower_equilibrium_reply_checked, leader_subproblem,
    membership_gamma_hat, solve_stackelberg, ReplyDisagreement, SolveError, SolveOptions,
    StackelbergOutcome, SubproblemOutcome, SubsetValue, INFEASIBLE_SENTINEL, REPLY_TOL,
};
pub use model::{
    follower_utility, leader_utility, region_outcome, AllocationError, AllocationVector,
    BrSelection, Firm, RegionOutcome, Scenario, ScenarioError, SolutionMode, Winner, BUDGET_TOL,
    RATIO_TOL, STRICT_TOL, VALUE_TIE_TOL,
};
pub use oracle::{
    grid_allocations, grid_point_count, oracle_follower_br, oracle_stackelberg, GridError,
    GridSpec, OracleEquilibrium, OracleReport, Verdict, DEFAULT_MAX_POINTS,
};
pub use regions::RegionSet;
pub use sis::{
    simulate_bi_sis, steady_state_check, SeedLevels, SimError, SteadyStateReport,
    SteadyStateVerdict, Trajectory,
};
pub use sweep::{
    evaluate_claims, format_sig9, run_sweep, sweep_csv, ClaimsReport, SweepError, SweepGrid,
    SweepRow,
};
