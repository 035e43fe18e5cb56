//! `beamfp` — drive the fingerprint-positioning pipeline from one
//! configuration file.
//!
//! Subcommands: `scene`, `dataset`, `train`, `eval`, `verify`.
//! Exit codes: 0 success, 2 configuration error, 3 data/geometry error,
//! 4 training divergence, 5 verification failure.

mod commands;
mod config;

use beamfp::Error;
use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "beamfp", version, about = "Beamformed CSI fingerprint positioning pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the scene file and print per-point LOS status
    Scene {
        /// Run configuration file (TOML)
        config: PathBuf,
    },
    /// Calibrate the link budget and build the dataset file
    Dataset {
        config: PathBuf,
        /// Override [dataset].samples_per_reference
        #[arg(long)]
        samples_per_reference: Option<usize>,
        /// Override [dataset].samples_per_test
        #[arg(long)]
        samples_per_test: Option<usize>,
    },
    /// Train the classifier; writes checkpoints and metric history
    Train {
        config: PathBuf,
        /// Override [train].epochs
        #[arg(long)]
        epochs: Option<usize>,
        /// Override [train].learning_rate
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Continue from the checkpoints in the output directory
        #[arg(long)]
        resume: bool,
    },
    /// Evaluate the best checkpoint on the test set
    Eval {
        config: PathBuf,
        /// Override [positioning].top_r
        #[arg(long)]
        top_r: Option<usize>,
        /// Also tabulate the overall mean error for R in 1..=8
        #[arg(long)]
        sweep_r: bool,
    },
    /// Recompute and check the artifact hash chain
    Verify {
        config: PathBuf,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Divergence { .. } => 4,
        Error::Verification(_) => 5,
        _ => 3,
    }
}

fn run(cli: Cli) -> beamfp::Result<()> {
    match cli.command {
        Command::Scene { config } => {
            let cfg = RunConfig::load(&config)?;
            commands::cmd_scene(&cfg)
        }
        Command::Dataset {
            config,
            samples_per_reference,
            samples_per_test,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(n) = samples_per_reference {
                cfg.dataset.samples_per_reference = n;
            }
            if let Some(n) = samples_per_test {
                cfg.dataset.samples_per_test = n;
            }
            commands::cmd_dataset(&cfg)
        }
        Command::Train {
            config,
            epochs,
            learning_rate,
            resume,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(n) = epochs {
                cfg.train.epochs = n;
            }
            if let Some(lr) = learning_rate {
                cfg.train.learning_rate = lr;
            }
            commands::cmd_train(&cfg, resume)
        }
        Command::Eval {
            config,
            top_r,
            sweep_r,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(r) = top_r {
                cfg.positioning.top_r = r;
            }
            commands::cmd_eval(&cfg, sweep_r)
        }
        Command::Verify { config } => {
            let cfg = RunConfig::load(&config)?;
            commands::cmd_verify(&cfg)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
