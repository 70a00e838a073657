use clap::{Parser, Subcommand};
use duopoly_cli::*;
use duopoly_core::{SeedLevels, SolutionMode, DEFAULT_MAX_POINTS};
use std::path::PathBuf;
use std::process::ExitCode;

/// Budget allocation in a two-firm, multi-region, winner-takes-all market:
/// Stackelberg solver, best-response explorer, budget sweeps, brute-force
/// verification, and adoption-dynamics simulation.
#[derive(Parser)]
#[command(name = "duopoly", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Follower best response against a fixed leader allocation.
    Br {
        #[arg(long)]
        scenario: PathBuf,
        /// Leader allocation as comma-separated spends, one per region.
        #[arg(long)]
        gamma1: String,
        /// weak (pessimistic tie-break) or strong (optimistic).
        #[arg(long, default_value = "weak")]
        mode: SolutionMode,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the full game.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "weak")]
        mode: SolutionMode,
        /// Inner-solver value precision.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Refuse scenarios with more regions than this.
        #[arg(long, default_value_t = 16)]
        region_limit: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve over a grid of budget pairs; write sweep.csv and claims.json.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Ascending leader budgets, comma-separated.
        #[arg(long)]
        b1: String,
        /// Ascending follower budgets, comma-separated.
        #[arg(long)]
        b2: String,
        #[arg(long, default_value = "weak")]
        mode: SolutionMode,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the solvers against brute-force grid searches.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        /// Grid step; defaults to 0.001·B2 for the follower check and
        /// 0.01·B1 for the bilevel checks.
        #[arg(long)]
        step: Option<f64>,
        /// Restrict to the first N regions to keep the grids tractable.
        #[arg(long, default_value_t = 3)]
        k_max: usize,
        /// Pass tolerance on solver-minus-oracle gaps.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Cap on enumerated grid points.
        #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
        max_points: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one region's adoption dynamics and check the steady state.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Region number (1-based).
        #[arg(long)]
        region: usize,
        /// Leader spend in that region.
        #[arg(long)]
        gamma1: f64,
        /// Follower spend in that region.
        #[arg(long)]
        gamma2: f64,
        #[arg(long, default_value_t = 1e4)]
        horizon: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 0.01)]
        seed_leader: f64,
        #[arg(long, default_value_t = 0.01)]
        seed_follower: f64,
        /// Pass tolerance on the terminal state.
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
        /// Write the sampled trajectory as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Br {
            scenario,
            gamma1,
            mode,
            out,
        } => cmd_br(&scenario, &gamma1, mode, out.as_deref()),
        Command::Solve {
            scenario,
            mode,
            tol,
            region_limit,
            out,
        } => cmd_solve(&scenario, mode, tol, region_limit, out.as_deref()),
        Command::Sweep {
            scenario,
            b1,
            b2,
            mode,
            tol,
            out,
        } => cmd_sweep(&scenario, &b1, &b2, mode, tol, &out),
        Command::Verify {
            scenario,
            step,
            k_max,
            tol,
            max_points,
            out,
        } => cmd_verify(&scenario, step, k_max, tol, max_points, out.as_deref()),
        Command::Simulate {
            scenario,
            region,
            gamma1,
            gamma2,
            horizon,
            dt,
            seed_leader,
            seed_follower,
            tol,
            out,
        } => cmd_simulate(
            &scenario,
            region,
            gamma1,
            gamma2,
            horizon,
            dt,
            SeedLevels {
                leader: seed_leader,
                follower: seed_follower,
            },
            tol,
            out.as_deref(),
        ),
    };
    match result {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}
