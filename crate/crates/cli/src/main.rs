//! `fdi-growth`: runs scenarios of the FDI growth model from a TOML file.

// `!(x < y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fdi_growth::sweep::Axis;

use commands::{Output, SRange};
use config::ScenarioConfig;
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "fdi-growth", version, about = "Optimal growth with FDI and costly R&D")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, overriding `output.directory`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate F, G0 and G with the optimal allocation.
    Tech {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-2)]
        s_min: f64,
        #[arg(long, default_value_t = 1e2)]
        s_max: f64,
        /// Number of log-spaced savings levels.
        #[arg(long, default_value_t = 200)]
        s_points: usize,
    },
    /// Steady states, thresholds and the regime classification.
    Steady {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the Bellman equation and write the policy.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Solve, then simulate from `x0` and check the path.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Classify the regime over one or two parameter axes.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// NAME:LO:HI:N with NAME one of a, b, x_bar, beta, sigma.
        #[arg(long = "axis", value_name = "SPEC")]
        axes: Vec<String>,
    },
}

fn run(cli: Cli) -> CliResult<Vec<String>> {
    let common = match &cli.command {
        Command::Tech { common, .. }
        | Command::Steady { common }
        | Command::Solve { common }
        | Command::Simulate { common }
        | Command::Sweep { common, .. } => common,
    };
    let config = ScenarioConfig::load(&common.config)?;
    let out = Output::new(&config, common.out.as_deref());
    match &cli.command {
        Command::Tech { s_min, s_max, s_points, .. } => commands::tech(
            &out,
            SRange { min: *s_min, max: *s_max, points: *s_points },
        ),
        Command::Steady { .. } => commands::steady(&out),
        Command::Solve { .. } => commands::solve(&out),
        Command::Simulate { .. } => commands::run_simulation(&out),
        Command::Sweep { axes, .. } => {
            let axes = axes
                .iter()
                .map(|s| s.parse::<Axis>().map_err(|e| CliError::Usage(e.to_string())))
                .collect::<CliResult<Vec<_>>>()?;
            commands::run_sweep(&out, &axes)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let err = CliError::Usage(msg.trim_start_matches("error: ").to_string());
            eprintln!("{}", err.line());
            return err.exit_code();
        }
    };
    match run(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}
