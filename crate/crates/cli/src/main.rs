//! Batch front-end: configure models, run the normal form, verify the
//! dressed operators against exact diagonalization, and emit plot-ready
//! CSV data.
//!
//! Exit codes: 0 ok, 2 validation, 3 contraction violation, 4 capacity,
//! 5 verification failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "prethermal", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the iterative normal form and write the dressed operators.
    NormalForm {
        /// JSON run configuration; flags override individual fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: commands::ConfigOverrides,
    },
    /// Measure the dressed operators against exact evolution.
    Verify {
        /// JSON run configuration (a resolved one in the operators
        /// directory takes precedence).
        #[arg(long)]
        config: PathBuf,
        /// Directory holding a previous normal-form run.
        #[arg(long)]
        operators_dir: PathBuf,
    },
    /// Print the closed-form constants as JSON.
    Constants(commands::ConstantsArgs),
    /// Run normal-form and verify on the shipped Ising defaults.
    IsingDemo(commands::DemoArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::NormalForm { config, overrides } => {
            commands::cmd_normal_form(config.as_deref(), overrides).map(|()| true)
        }
        Command::Verify {
            config,
            operators_dir,
        } => commands::cmd_verify(config, operators_dir),
        Command::Constants(args) => commands::cmd_constants(args).map(|()| true),
        Command::IsingDemo(args) => commands::cmd_ising_demo(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            let payload = serde_json::json!({
                "error": {
                    "exit_code": 5,
                    "kind": "verification_failed",
                    "message": "a gating verification check failed; see verify_summary.csv",
                }
            });
            eprintln!("{payload}");
            ExitCode::from(5)
        }
        Err(err) => ExitCode::from(output::report_error(&err) as u8),
    }
}
