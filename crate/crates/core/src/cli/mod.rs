//! Command-line interface.
//!
//! Settings resolve as: command-line flag, then configuration file, then
//! built-in default.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Result;

pub use commands::{inspect_summary, InspectSummary};

#[derive(Debug, Parser)]
#[command(name = "mtrack", version, about = "Motion tracking training utilities")]
pub struct Cli {
    /// More log output (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Only errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn log_level(&self) -> log::LevelFilter {
        if self.quiet {
            return log::LevelFilter::Error;
        }
        match self.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            2 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize a clip library and write its manifest.
    Inspect(InspectArgs),
    /// Run the synthetic training loop.
    RunSim(RunSimArgs),
    /// Tracking metrics between a reference and an actual trajectory.
    Metrics(MetricsArgs),
    /// Task reward terms between a reference and an actual trajectory.
    Reward(RewardArgs),
    /// Tokenizer training loss between two motion tensors.
    Loss(LossArgs),
    /// Nearest-codebook indices of latent vectors.
    Quantize(QuantizeArgs),
    /// Print or write a default configuration.
    ExportConfig(ExportArgs),
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Library directory.
    #[arg(long)]
    pub library: PathBuf,
    /// Manifest destination [default: <library>/library.manifest].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Uniform,
}

#[derive(Debug, Args)]
pub struct RunSimArgs {
    /// Run configuration (TOML with a required [run] section).
    #[arg(long)]
    pub config: PathBuf,
    /// Clip library directory; overrides the configuration's [library].
    #[arg(long)]
    pub library: Option<PathBuf>,
    /// Output directory for iterations.csv and clips.csv (and comparison.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides run.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides run.iterations.
    #[arg(long)]
    pub iterations: Option<u64>,
    /// Also compare against a baseline sampler over several seeds.
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    /// Number of consecutive seeds for the baseline comparison.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AngleMode {
    Joint,
    Body,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Reference clip file.
    pub reference: PathBuf,
    /// Actual clip file.
    pub actual: PathBuf,
    /// CSV destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AngleMode::Joint)]
    pub angle_mode: AngleMode,
}

#[derive(Debug, Args)]
pub struct RewardArgs {
    pub reference: PathBuf,
    pub actual: PathBuf,
    /// Reward configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Evaluate a single frame instead of averaging over all frames.
    #[arg(long)]
    pub frame: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Ground-truth motion (`.clip` human clip or matrix text file).
    pub ground_truth: PathBuf,
    /// Reconstructed motion, same format.
    pub reconstruction: PathBuf,
    /// Commitment distance term.
    #[arg(long, default_value_t = 0.0)]
    pub commit: f64,
    /// Frame rate used for velocity differences [default: the clip's, or 1].
    #[arg(long)]
    pub fps: Option<f64>,
    /// Loss weights (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    /// Codebook matrix file.
    pub codebook: PathBuf,
    /// Latent matrix file, one latent per row.
    pub latents: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConfigKind {
    Sim,
    Reward,
    Loss,
    Observation,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, value_enum, default_value_t = ConfigKind::Sim)]
    pub kind: ConfigKind,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs the parsed command. `Ok` carries the process exit code, which is
/// nonzero when a run finished but failed an invariant check.
pub fn execute(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Inspect(a) => commands::inspect(a),
        Command::RunSim(a) => commands::run_sim(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::Reward(a) => commands::reward(a),
        Command::Loss(a) => commands::loss(a),
        Command::Quantize(a) => commands::quantize(a),
        Command::ExportConfig(a) => commands::export_config(a),
    }
}
