use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;
mod range;

use commands::Failure;

/// Thermodynamics of mean-field spin models through their Hamilton-Jacobi
/// description.
#[derive(Debug, Parser)]
#[command(name = "mfhj", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON run-config file; explicit flags take precedence over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Write the result here instead of stdout, with a `.meta.json` sidecar.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for grid evaluations (MFHJ_WORKERS overrides).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Report pressures with the unnormalized counting constant.
    #[arg(long, global = true)]
    pub counting: bool,

    /// Average asymmetric measure input with its mirror image instead of
    /// rejecting it.
    #[arg(long, global = true)]
    pub symmetrize: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium state at one (beta, h).
    Solve(SolveArgs),
    /// Equilibrium states over a (beta, h) grid, as CSV.
    Sweep(SweepArgs),
    /// Critical inverse temperature of a measure.
    Critical(MeasureOnly),
    /// One-sided magnetizations at zero field and the characteristics.
    Shock(ShockArgs),
    /// Finite-size convergence of the viscous action and velocity.
    Finiten(FiniteArgs),
    /// Two-party equilibrium state.
    Bipartite(BipartiteArgs),
    /// Two-party states over a (beta, alpha) grid, as CSV.
    BipartiteSweep(BipartiteSweepArgs),
    /// Exact two-party pressures against the limit.
    BipartiteFiniten(BipartiteFiniteArgs),
    /// Run the invariant suite.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct MeasureOnly {
    /// Builtin name (dichotomic, uniform, three_atoms) or JSON file.
    #[arg(long)]
    pub measure: Option<String>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Defaults to dichotomic.
    #[arg(long)]
    pub measure: Option<String>,
    /// `start:stop:step`, `start:stop` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Defaults to 0.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
}

#[derive(Debug, Args)]
pub struct ShockArgs {
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Foot points of the characteristics (default 0.05:3:0.05).
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    /// Gnuplot table of characteristics (default `<out>.characteristics.dat`).
    #[arg(long)]
    pub characteristics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FiniteArgs {
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<String>,
    /// System sizes, at least four, ascending.
    #[arg(long)]
    pub n: Option<String>,
    /// JSON slope summary (default stderr).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PartyMeasures {
    /// Measure of the first party (default dichotomic).
    #[arg(long)]
    pub measure_sigma: Option<String>,
    /// Measure of the second party (default dichotomic).
    #[arg(long)]
    pub measure_tau: Option<String>,
}

#[derive(Debug, Args)]
pub struct BipartiteArgs {
    #[command(flatten)]
    pub measures: PartyMeasures,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h2: Option<String>,
    /// `fixed-point` (default) or `minmax`.
    #[arg(long)]
    pub method: Option<String>,
}

#[derive(Debug, Args)]
pub struct BipartiteSweepArgs {
    #[command(flatten)]
    pub measures: PartyMeasures,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h2: Option<String>,
}

#[derive(Debug, Args)]
pub struct BipartiteFiniteArgs {
    #[command(flatten)]
    pub measures: PartyMeasures,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h2: Option<String>,
    /// First-party sizes; the second party has alpha * n1 spins.
    #[arg(long)]
    pub n1: Option<String>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Smaller grids.
    #[arg(long)]
    pub quick: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.report());
            ExitCode::from(failure.exit_code())
        }
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Invariant(_) => 4,
            Failure::Io(_) => 1,
        }
    }
}
