use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jflow_cli::commands::{cmd_compare, cmd_critical, cmd_run, cmd_validate, Overrides};
use jflow_cli::config::load_config;
use jflow_cli::error::CliError;

/// Spectral J-flow runs, Monge-Ampere solves and comparisons on flat 2-tori.
///
/// Exit status: 0 ok, 1 usage, 2 validation, 3 hypothesis violation,
/// 4 numerical failure, 5 non-convergence.
#[derive(Debug, Parser)]
#[command(name = "jflow", version)]
struct Cli {
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Worker threads for the data-parallel kernels.
    #[arg(long, global = true, env = "JFLOW_WORKERS", value_name = "N")]
    workers: Option<usize>,
    /// Write phi_NNNNNN.jfld every K steps (overrides `snapshot_interval`).
    #[arg(long, global = true, value_name = "K")]
    snapshot_every: Option<u64>,
    /// Suppress progress and report lines.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the flow and write series.csv, snapshots and summary.json.
    Run {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
    /// Solve the critical equation by Newton-Krylov.
    Critical {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
    /// Compare the metric snapshots of two output directories.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        threshold: f64,
    },
    /// Parse the config and check the model hypotheses.
    Validate {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let ov = Overrides {
        output: cli.output,
        workers: cli.workers,
        snapshot_every: cli.snapshot_every,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Run { config } => {
            let cfg = load_config(&config)?;
            let report = cmd_run(&cfg, &ov)?;
            if !ov.quiet {
                eprintln!("wrote {}", report.output_dir.display());
            }
            report.error.map_or(Ok(()), Err)
        }
        Command::Critical { config } => {
            let cfg = load_config(&config)?;
            cmd_critical(&cfg, &ov)?.error.map_or(Ok(()), Err)
        }
        Command::Compare { dir_a, dir_b, threshold } => {
            let report = cmd_compare(&dir_a, &dir_b, threshold, ov.quiet)?;
            if report.within {
                Ok(())
            } else {
                Err(CliError::new(
                    jflow_cli::error::Category::NumericalFailure,
                    format!("difference {:e} exceeds threshold {threshold:e}", report.sup),
                ))
            }
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            cmd_validate(&cfg, ov.quiet).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let err = CliError::usage(e.kind().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
