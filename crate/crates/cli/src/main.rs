//! `psurr`: train, evaluate, sweep, and export curves for the PPO surrogate
//! family (clipping, rollback, relative-Pearson-divergence regularization).
//!
//! Exit codes: 0 success, 2 usage/config error, 3 runtime failure.

mod commands;
mod config;
mod outputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ConfigOverrides;

/// A command failure with its exit code.
#[derive(Debug)]
pub enum CmdError {
    /// Bad usage or configuration (exit 2).
    Usage(String),
    /// Failure while doing the work (exit 3).
    Runtime(String),
}

impl CmdError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CmdError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CmdError::Runtime(msg.into())
    }

    /// A core error surfaced while interpreting user input.
    pub fn from_config(e: psurr_core::Error) -> Self {
        CmdError::Usage(e.to_string())
    }

    /// A core error surfaced mid-run.
    pub fn from_runtime(e: psurr_core::Error) -> Self {
        CmdError::Runtime(e.to_string())
    }

    fn exit_code(&self) -> ExitCode {
        match self {
            CmdError::Usage(_) => ExitCode::from(2),
            CmdError::Runtime(_) => ExitCode::from(3),
        }
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Usage(m) | CmdError::Runtime(m) => f.write_str(m),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "psurr",
    version,
    about = "Policy-surrogate RL: PPO clipping, rollback, and relative-Pearson regularization",
    after_help = "The default output root is $PSURR_OUT_DIR (falling back to ./psurr_out), \
                  with one subdirectory per command; --out overrides it."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Train a policy from a JSON config, writing metrics, evals, and
    /// checkpoints.
    Train(TrainArgs),
    /// Evaluate a policy checkpoint: per-episode returns plus
    /// median/mean/95% CI.
    Eval(EvalArgs),
    /// Export per-variant loss curves and the relative-ratio table as CSV
    /// (optionally SVG).
    Curves(CurvesArgs),
    /// Run a seeds x variants comparison sweep and aggregate eval medians.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// JSON run config (flat object; see README for the keys).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct EvalArgs {
    /// Policy checkpoint (policy.json from a training run).
    #[arg(long)]
    checkpoint: PathBuf,
    /// Environment to evaluate on: pendulum, cartpole_continuous, bandit2.
    #[arg(long)]
    env: String,
    /// Number of test episodes.
    #[arg(long, default_value_t = 50)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also export full transition traces of the first N episodes.
    #[arg(long, default_value_t = 0)]
    trace: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct CurvesArgs {
    /// Variants to export, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "ppo_clip,ppo_rb,ppo_rpe")]
    variants: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Mixture ratio for ppo_rpe.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Rollback gain for ppo_rb.
    #[arg(long, default_value_t = 0.3)]
    eta: f64,
    #[arg(long, default_value_t = 0.01)]
    rho_min: f64,
    #[arg(long, default_value_t = 3.0)]
    rho_max: f64,
    #[arg(long, default_value_t = 600)]
    points: usize,
    /// Also render static SVG line plots.
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON run config shared by every run (variant/seed overridden per run).
    #[arg(long)]
    config: PathBuf,
    /// Seeds to run, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    /// Variants to run, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "ppo_clip,ppo_rb,ppo_rpe")]
    variants: Vec<String>,
    /// Parallel worker threads (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Redo runs even when their summaries already exist.
    #[arg(long)]
    force: bool,
}

fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Train(a) => {
            commands::cmd_train(&a.config, &a.overrides, a.out.as_deref(), a.force)
        }
        Command::Eval(a) => {
            commands::cmd_eval(&a.checkpoint, &a.env, a.episodes, a.seed, a.trace, a.out.as_deref(), a.force)
        }
        Command::Curves(a) => commands::cmd_curves(
            &a.variants,
            a.epsilon,
            a.beta,
            a.eta,
            a.rho_min,
            a.rho_max,
            a.points,
            a.svg,
            a.out.as_deref(),
            a.force,
        ),
        Command::Sweep(a) => {
            let workers = a.workers.unwrap_or_else(|| {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            });
            commands::cmd_sweep(&a.config, &a.seeds, &a.variants, workers, a.out.as_deref(), a.force)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
