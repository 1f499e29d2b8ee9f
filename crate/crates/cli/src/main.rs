//! Operator command line for the crossing stack.
//!
//! Four command families: `kernels selfcheck` drives the tensor-kernel
//! invariant suite, `sim run` / `sim ablate-n` simulate crossings and the
//! validation-window sweep, `controller replay` streams a detection log
//! through the signal controller, and `dataset stats|split|eval-ap` cover
//! annotation tooling. Every command writes its artifacts plus a
//! `manifest.json` recording the effective configuration digest, seeds,
//! and crate versions; nothing depends on the wall clock, so a rerun with
//! the same inputs reproduces every output byte for byte.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod manifest;

#[derive(Parser)]
#[command(name = "crosslight", version, about = "Barrier-free crossing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tensor kernel self-checks
    Kernels {
        #[command(subcommand)]
        command: KernelsCommand,
    },
    /// Crossing scenario simulation
    Sim {
        #[command(subcommand)]
        command: SimCommand,
    },
    /// Signal controller tools
    Controller {
        #[command(subcommand)]
        command: ControllerCommand,
    },
    /// Annotation statistics, splitting, and evaluation
    Dataset {
        #[command(subcommand)]
        command: DatasetCommand,
    },
}

#[derive(Subcommand)]
enum KernelsCommand {
    /// Run the kernel invariant suite and report each property
    Selfcheck(SelfcheckArgs),
}

#[derive(Args)]
pub struct SelfcheckArgs {
    /// Random cases per property
    #[arg(long, default_value_t = 500)]
    cases: usize,
    /// Seed for the random cases
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Append a synthetic failing property (negative control for exit codes)
    #[arg(long, hide = true)]
    inject_failure: bool,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Subcommand)]
enum SimCommand {
    /// Simulate one green phase; write metrics, logs, and manifest
    Run(SimRunArgs),
    /// Sweep the validation window N and write the ablation table
    AblateN(AblateArgs),
}

#[derive(Args)]
pub struct SimRunArgs {
    /// Scenario description (TOML); built-in defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the scenario seed
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
pub struct AblateArgs {
    /// Scenario description (TOML); built-in defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the scenario seed
    #[arg(long)]
    seed: Option<u64>,
    /// Validation windows to sweep, as `1..5` or `1,3,5`
    #[arg(long, default_value = "1..5")]
    n_values: String,
    /// Episodes per window and arrival
    #[arg(long, default_value_t = 500)]
    runs: u32,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Subcommand)]
enum ControllerCommand {
    /// Replay a detection event log through the controller
    Replay(ReplayArgs),
}

#[derive(Args)]
pub struct ReplayArgs {
    /// Detection event log (JSON lines)
    #[arg(long)]
    events: PathBuf,
    /// Controller settings (TOML)
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Class histogram with season breakdown
    Stats(StatsArgs),
    /// Deterministic train/eval split over image ids
    Split(SplitArgs),
    /// Average precision of predictions against labels
    EvalAp(EvalApArgs),
}

#[derive(Args)]
pub struct StatsArgs {
    /// Label directory (`.txt` files, optional season subdirectories)
    #[arg(long)]
    labels: PathBuf,
    /// Class-names file (12 lines, fixed order)
    #[arg(long)]
    names: PathBuf,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
pub struct SplitArgs {
    /// Label directory
    #[arg(long)]
    labels: PathBuf,
    /// Class-names file
    #[arg(long)]
    names: PathBuf,
    /// Training fraction, in (0, 1)
    #[arg(long, default_value_t = 0.8)]
    ratio: f64,
    /// Shuffle seed
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
pub struct EvalApArgs {
    /// Label directory (ground truth)
    #[arg(long)]
    labels: PathBuf,
    /// Class-names file
    #[arg(long)]
    names: PathBuf,
    /// Predictions (JSON lines, pixel boxes)
    #[arg(long)]
    predictions: PathBuf,
    /// Image size used to denormalize labels, as WIDTHxHEIGHT
    #[arg(long, default_value = "640x512")]
    image_size: String,
    #[command(flatten)]
    out: OutDir,
}

/// Output directory selection shared by every command.
#[derive(Args)]
pub struct OutDir {
    /// Output directory (default: $CROSSLIGHT_OUT_DIR, then ./out)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutDir {
    pub fn resolve(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os("CROSSLIGHT_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Kernels {
            command: KernelsCommand::Selfcheck(args),
        } => commands::kernels::selfcheck(args),
        Command::Sim {
            command: SimCommand::Run(args),
        } => commands::sim::run(args),
        Command::Sim {
            command: SimCommand::AblateN(args),
        } => commands::sim::ablate(args),
        Command::Controller {
            command: ControllerCommand::Replay(args),
        } => commands::replay::replay(args),
        Command::Dataset {
            command: DatasetCommand::Stats(args),
        } => commands::dataset::stats(args),
        Command::Dataset {
            command: DatasetCommand::Split(args),
        } => commands::dataset::split(args),
        Command::Dataset {
            command: DatasetCommand::EvalAp(args),
        } => commands::dataset::eval_ap(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
