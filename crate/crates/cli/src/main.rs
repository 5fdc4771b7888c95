use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use borderline_cli::{load_plan, merge_reports, run, CliError, Command, Overrides, SpaceArg, EXIT_FAILURE, EXIT_PASS};

#[derive(Parser, Debug)]
#[command(
    name = "bblab",
    version,
    about = "Verification runs for borderline Sobolev estimates"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Averaging, integration-by-parts, coarea and Hardy checks.
    VerifyIdentities(RunArgs),
    /// λ-sweeps of the mollifier decompositions.
    Decompose(RunArgs),
    /// Lower bounds on the inequality constants over the family catalog.
    Estimate(RunArgs),
    /// Merge report shards into one summary.
    Report {
        /// Shard CSV files written by the other subcommands.
        shards: Vec<PathBuf>,
        #[arg(long, default_value = "bblab-out")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "bblab-out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=3))]
    dimension: Option<u64>,
    #[arg(long, value_enum)]
    space: Option<SpaceArg>,
    /// Multiplies every tolerance.
    #[arg(long)]
    tolerance_scale: Option<f64>,
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let (command, args) = match cli.command {
        Sub::VerifyIdentities(a) => (Command::VerifyIdentities, a),
        Sub::Decompose(a) => (Command::Decompose, a),
        Sub::Estimate(a) => (Command::Estimate, a),
        Sub::Report { shards, out } => {
            let report = merge_reports(&shards, &out)?;
            return Ok(report.pass());
        }
    };
    let overrides = Overrides {
        seed: args.seed,
        dimension: args.dimension.map(|d| d as usize),
        space: args.space,
        tolerance_scale: args.tolerance_scale,
    };
    let plan = load_plan(command, args.config.as_deref(), &overrides)?;
    let report = run(command, &plan, &args.out)?;
    let s = report.summary();
    eprintln!("{}: {}/{} checks passed", command.name(), s.passed, s.checks);
    for row in report.rows.iter().filter(|r| !r.pass) {
        eprintln!(
            "  FAIL {} measured={} expected={} tol={}",
            row.check_id, row.measured, row.expected, row.tolerance
        );
    }
    Ok(report.pass())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::from(EXIT_PASS as u8),
        Ok(false) => ExitCode::from(EXIT_FAILURE as u8),
        Err(e) => {
            eprintln!("bblab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
