//! `sustain`: regimes, moments, Chebyshev bounds and simulation for a
//! constant consumption level drawn from stochastic wealth.
//!
//! Exit codes: 0 ok, 2 config or usage error, 3 domain error, 4 i/o error.

use clap::{Parser, Subcommand};
use sustain_cli::commands;
use sustain_cli::config::{CommonArgs, ExperimentConfig};
use sustain_cli::error::CliError;

#[derive(Parser)]
#[command(
    name = "sustain",
    version,
    about = "Survival of a constant consumption level under stochastic returns"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Support bounds, E log eps and the zero/interior/one thresholds
    Classify,
    /// Inverse moments gamma_r and moments of Z or Z_n up to --rmax
    Moments,
    /// Chebyshev lower bounds on survival at each --x and --horizon
    Bounds,
    /// Boundaries of the order schedule, one row per (r, horizon)
    Boundaries {
        /// Number of orders r
        #[arg(long, default_value_t = 5)]
        rows: u32,
    },
    /// Monte Carlo samples of Z_n (csv) or survival estimates at each --x (json)
    Simulate,
    /// Rebuild a published table (1-9) with a delta report
    Reproduce {
        table: u8,
        /// Use the four-digit lognormal and gamma parameters instead of the
        /// exact moment matches
        #[arg(long)]
        rounded: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = ExperimentConfig::resolve(&cli.common)?;
    match cli.command {
        Command::Classify => commands::cmd_classify(&cfg),
        Command::Moments => commands::cmd_moments(&cfg),
        Command::Bounds => commands::cmd_bounds(&cfg),
        Command::Boundaries { rows } => commands::cmd_boundaries(&cfg, rows),
        Command::Simulate => commands::cmd_simulate(&cfg),
        Command::Reproduce { table, rounded } => commands::cmd_reproduce(&cfg, table, rounded),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("sustain: {e}");
        std::process::exit(e.exit_code());
    }
}
