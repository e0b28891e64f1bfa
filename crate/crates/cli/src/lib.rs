//! Scenario files and subcommands of the `kirchhoff` binary.

pub mod commands;
pub mod scenario;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{CliError, Context, Outcome, Status};
pub use scenario::{ConfigError, Scenario};

#[derive(Debug, Parser)]
#[command(
    name = "kirchhoff",
    version,
    about = "Kirchhoff equation spectral simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario file (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Worker threads; defaults to all available cores.
    #[arg(long, global = true, env = "KIRCHHOFF_WORKERS")]
    pub workers: Option<usize>,

    /// Overrides the command's primary tolerance.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Direct nonlinear solve; writes the trajectory and a report.
    Simulate,
    /// Picard iteration for the coefficient with image audits.
    Fixedpoint,
    /// Energy audit of the linear problem for a prescribed coefficient.
    LinearAudit,
    /// Evaluates the theorem's hypotheses for the initial data.
    Certify,
    /// Prints every norm of the initial data.
    Norms,
}

/// Runs a parsed command line and returns its outcome.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let Some(config) = &cli.config else {
        return Err(ConfigError {
            field: "--config".into(),
            message: "a scenario file is required".into(),
        }
        .into());
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(ConfigError {
                field: "--workers".into(),
                message: "must be at least 1".into(),
            }
            .into());
        }
        // A second call in the same process leaves the first pool in place.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    if let Some(tol) = cli.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(ConfigError {
                field: "--tol".into(),
                message: format!("must be finite and > 0, got {tol}"),
            }
            .into());
        }
    }
    let scenario = Scenario::load(config).map_err(|e| CliError {
        status: Status::Usage,
        message: format!("{}: {e}", config.display()),
    })?;
    let ctx = Context {
        out_dir: cli.out_dir.clone(),
        tol: cli.tol,
    };
    match cli.command {
        Command::Simulate => commands::simulate(&scenario, &ctx),
        Command::Fixedpoint => commands::fixedpoint(&scenario, &ctx),
        Command::LinearAudit => commands::linear_audit(&scenario, &ctx),
        Command::Certify => commands::certify(&scenario, &ctx),
        Command::Norms => commands::norms(&scenario, &ctx),
    }
}
