mod cmds;
mod config;
mod pipeline;

use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or usage; exits with code 2.
    Config(String),
    /// Missing or unreadable inputs and outputs; exits with code 3.
    Io(String),
}

/// Shape completion with explicit uncertain regions: dataset synthesis,
/// occupancy-model training, region extraction, evaluation, grasp filtering.
#[derive(Parser)]
#[command(name = "occfield", version, disable_help_subcommand = true)]
struct Cli {
    /// Flat key = value config file; CLI flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker count (reserved; the pipeline is currently single threaded).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize train/val/test samples of ambiguous partial views.
    Gen {
        #[arg(long)]
        n_train: Option<usize>,
        #[arg(long)]
        n_val: Option<usize>,
        #[arg(long)]
        n_test: Option<usize>,
        /// novel-view or novel-instance
        #[arg(long)]
        mode: Option<String>,
    },
    /// Train an occupancy model on a generated dataset.
    Train {
        /// Dataset root (a `gen` output directory).
        #[arg(long)]
        data: PathBuf,
        /// binary or trinary
        #[arg(long)]
        model: Option<String>,
    },
    /// Sweep the isosurface threshold on the validation split.
    Calibrate {
        #[arg(long)]
        data: PathBuf,
        /// Checkpoint file from `train`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Predict fields and extract occupied and uncertain regions.
    Extract {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// auto, binary, trinary or variance
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        tau_u: Option<f64>,
    },
    /// Score extracted regions against ground truth.
    Eval {
        #[arg(long)]
        data: PathBuf,
        /// Prediction root (an `extract` output directory).
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Sample parallel-jaw grasps and filter those touching uncertain space.
    Grasp {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.set("jobs", &jobs.to_string())?;
    }
    let out = cli
        .out
        .clone()
        .ok_or_else(|| CliError::Config("--out <dir> is required".into()))?;
    match &cli.cmd {
        Cmd::Gen { n_train, n_val, n_test, mode } => {
            if let Some(n) = n_train {
                cfg.set("n_train", &n.to_string())?;
            }
            if let Some(n) = n_val {
                cfg.set("n_val", &n.to_string())?;
            }
            if let Some(n) = n_test {
                cfg.set("n_test", &n.to_string())?;
            }
            if let Some(m) = mode {
                cfg.set("mode", m)?;
            }
            cmds::cmd_gen(&cfg, &out)
        }
        Cmd::Train { data, model } => {
            if let Some(m) = model {
                cfg.set("model", m)?;
            }
            cmds::cmd_train(&cfg, data, &out)
        }
        Cmd::Calibrate { data, model } => cmds::cmd_calibrate(&cfg, data, model, &out),
        Cmd::Extract { data, model, split, method, tau, tau_u } => {
            if let Some(m) = method {
                cfg.set("method", m)?;
            }
            if let Some(t) = tau {
                cfg.set("tau", &t.to_string())?;
            }
            if let Some(t) = tau_u {
                cfg.set("tau_u", &t.to_string())?;
            }
            cfg.validate()?;
            cmds::cmd_extract(&cfg, data, split, model, &out)
        }
        Cmd::Eval { data, pred, split } => cmds::cmd_eval(&cfg, data, split, pred, &out),
        Cmd::Grasp { data, pred, split } => cmds::cmd_grasp(&cfg, data, split, pred, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
