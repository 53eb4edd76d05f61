mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::SweepParam;
use config::ModelConfig;
use error::CliError;

/// Exact solver for the batch-arrival multiserver queue with setup times.
#[derive(Debug, Parser)]
#[command(name = "mxsetup", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one model and write a JSON report.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Include factorial moments up to this order.
        #[arg(long)]
        moments: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter over a grid and write a CSV table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the analytic solution with the truncated-chain oracle.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Oracle truncation level (default: doubled until converged).
        #[arg(long)]
        jmax: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, hide = true, allow_hyphen_values = true)]
        perturb_root: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { config, moments, out } => {
            let cfg = ModelConfig::load(&config)?;
            let text = commands::solve(&cfg, moments)?;
            commands::emit(&text, out.as_deref())
        }
        Command::Sweep { config, param, grid, out } => {
            let cfg = ModelConfig::load(&config)?;
            let grid = commands::parse_grid(&grid)?;
            let text = commands::sweep(&cfg, param, &grid);
            commands::emit(&text, out.as_deref())
        }
        Command::Validate {
            config,
            jmax,
            tol,
            perturb_root,
        } => {
            let cfg = ModelConfig::load(&config)?;
            let text = commands::validate(&cfg, jmax, tol, perturb_root)?;
            commands::emit(&text, None)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.render());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
