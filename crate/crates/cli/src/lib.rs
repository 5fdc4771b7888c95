//! Batch runner behind the `bblab` binary: reads an experiment config, runs
//! one family of checks and writes a CSV report plus a JSON summary.

pub mod commands;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, Overrides, Plan, SpaceArg};
pub use report::{Report, ReportRow, Summary, SCHEMA};

/// Exit status for a run whose checks all pass.
pub const EXIT_PASS: i32 = 0;
/// Exit status when at least one check fails or cannot be evaluated.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for unreadable or invalid configuration and input files.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed shard: {0}")]
    Shard(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] borderline_core::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_FAILURE,
            _ => EXIT_CONFIG,
        }
    }
}

/// The check-running subcommands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    VerifyIdentities,
    Decompose,
    Estimate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyIdentities => "verify-identities",
            Command::Decompose => "decompose",
            Command::Estimate => "estimate",
        }
    }
}

pub fn load_plan(command: Command, config: Option<&Path>, overrides: &Overrides) -> Result<Plan, CliError> {
    let cfg = match config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.resolve(command.name(), overrides)
}

/// Runs `command` and writes its files into `out`. Returns the report.
pub fn run(command: Command, plan: &Plan, out: &Path) -> Result<Report, CliError> {
    let report = match command {
        Command::VerifyIdentities => commands::verify_identities(plan)?,
        Command::Decompose => {
            let (report, sweep) = commands::decompose(plan)?;
            std::fs::create_dir_all(out)?;
            report::write_csv(&out.join("lambda_sweep.csv"), &sweep)?;
            report
        }
        Command::Estimate => {
            let (report, trace) = commands::estimate(plan)?;
            std::fs::create_dir_all(out)?;
            report::write_csv(&out.join("trace.csv"), &trace)?;
            report
        }
    };
    report.write(out)?;
    Ok(report)
}

/// Merges shard CSVs into one report written to `out`.
pub fn merge_reports(shards: &[PathBuf], out: &Path) -> Result<Report, CliError> {
    let report = Report::merge(shards)?;
    report.write(out)?;
    Ok(report)
}
