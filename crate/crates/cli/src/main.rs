//! `cvqkd`: key-rate queries, parameter sweeps and validation runs.

mod axis;
mod commands;
mod error;
mod settings;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::error::{CliError, CliResult};
use crate::settings::Settings;

#[derive(Parser)]
#[command(name = "cvqkd", version, about = "Continuous-variable QKD key rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct Run {
    /// JSON file with default settings; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand)]
enum Command {
    /// One asymptotic (and, with --block, finite-size) rate as JSON.
    Rate(Run),
    /// Asymptotic rate along an axis, as CSV.
    Scan(Run),
    /// Excess-noise or frequency security thresholds, as CSV.
    Threshold(Run),
    /// Finite-size rate against block size (or another axis), as CSV.
    Finite(Run),
    /// Composable collective and coherent bounds of the MDI protocol, as CSV.
    Composable(Run),
    /// Fast and slow uniform-fading rates, as CSV.
    Fading(Run),
    /// Phase-encoded discrete-modulation rates, as CSV.
    Discrete(Run),
    /// Monte Carlo checks of the estimator statistics; JSON report.
    Validate(Run),
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("CVQKD_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CVQKD_THREADS = '{v}' is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Run(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let (run, f): (Run, fn(&Settings) -> CliResult<()>) = match cli.command {
        Command::Rate(r) => (r, commands::rate::cmd_rate),
        Command::Scan(r) => (r, commands::rate::cmd_scan),
        Command::Threshold(r) => (r, commands::threshold::cmd_threshold),
        Command::Finite(r) => (r, commands::finite::cmd_finite),
        Command::Composable(r) => (r, commands::composable::cmd_composable),
        Command::Fading(r) => (r, commands::fading::cmd_fading),
        Command::Discrete(r) => (r, commands::discrete::cmd_discrete),
        Command::Validate(r) => (r, commands::validate::cmd_validate),
    };
    let settings = Settings::layered(run.settings, run.config.as_deref())?;
    f(&settings)
}

/// Parses the command line; usage errors always end with a usage line.
fn parse() -> Result<Cli, ExitCode> {
    Cli::try_parse().map_err(|e| {
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        let text = e.render().to_string();
        eprint!("{text}");
        if !text.contains("Usage:") {
            eprintln!("\n{}", Cli::command().render_usage());
        }
        ExitCode::from(CliError::Usage(String::new()).exit_code() as u8)
    })
}

fn main() -> ExitCode {
    let cli = match parse() {
        Ok(cli) => cli,
        Err(code) => return code,
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
