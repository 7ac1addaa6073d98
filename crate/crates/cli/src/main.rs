//! `satlab`: train small networks, measure layer saturation, fit probes,
//! compute receptive fields and merge reports.

mod commands;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "satlab", version, about = "Layer saturation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one network from an experiment config.
    Train(TrainArgs),
    /// Per-layer saturation, average saturation and tail report of captured dumps.
    Analyze(AnalyzeArgs),
    /// Logistic-regression probes on captured dumps.
    Probe(ProbeArgs),
    /// Receptive fields, border layer and predicted unproductive layers.
    Rf(RfArgs),
    /// Capacity or difficulty sweep from an experiment config.
    Sweep(SweepArgs),
    /// Merge the report.json files below a directory into one sorted report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed and SATLAB_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the JSON summary instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Capture manifest listing the dumps.
    #[arg(long)]
    pub dumps: PathBuf,
    #[arg(long, default_value_t = satlab::spectral::DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value = "analyze")]
    pub run_id: String,
    /// Also write report.json into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub dumps: PathBuf,
    /// Labels file, one class index per line; defaults to the manifest's.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of samples held out for the test accuracy.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 40)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    #[arg(long, default_value_t = 4)]
    pub pool_cap: usize,
    #[arg(long, default_value = "probe")]
    pub run_id: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct RfArgs {
    /// Architecture description, one layer per line.
    #[arg(long)]
    pub arch: PathBuf,
    /// Input resolution in pixels.
    #[arg(long)]
    pub resolution: u64,
    #[arg(long, default_value = "rf")]
    pub run_id: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Configurations trained in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory searched recursively for report.json files.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "csv")]
    pub format: String,
    /// Write here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train(a) => commands::train::run(a),
        Command::Analyze(a) => commands::analyze::run(a),
        Command::Probe(a) => commands::probe::run(a),
        Command::Rf(a) => commands::rf::run(a),
        Command::Sweep(a) => commands::sweep::run(a),
        Command::Report(a) => commands::report::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { failure::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code())
        }
    }
}
