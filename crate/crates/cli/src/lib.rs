//! Command-line front end for `tsad-core`.
//!
//! `train` fits the autoencoder and dumps training scores, `detect` streams
//! a test split through one detrend/adaptation variant, `evaluate` scores a
//! score file against labels, `ablate` runs all four variants over several
//! seeds and `synth` writes the synthetic trend-shift pair.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod pipeline;
pub mod tables;

pub use config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "tsad",
    version,
    about = "Streaming anomaly detection with trend-aware test-time adaptation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write its checkpoint and training scores.
    Train(Overrides),
    /// Stream the test split through a trained checkpoint.
    Detect(Overrides),
    /// Compute metrics for a score file.
    Evaluate(EvaluateArgs),
    /// Run every detrend/adaptation variant over all seeds.
    Ablate(Overrides),
    /// Write the synthetic train/test CSVs.
    Synth(Overrides),
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// CSV with a `score` column, e.g. the output of `detect`.
    #[arg(long)]
    pub scores: PathBuf,
    /// CSV holding the label column, if the score file lacks one.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Training score dump used by percentile thresholds.
    #[arg(long)]
    pub train_scores: Option<PathBuf>,
}

/// Executes one command, writing its report to `out` and warnings to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Train(o) => {
            let a = commands::train(&o.resolve()?)?;
            writeln!(out, "checkpoint: {}", a.checkpoint.display())?;
            writeln!(out, "train scores: {}", a.train_scores.display())?;
            writeln!(out, "thresholds: {}", a.thresholds.display())?;
        }
        Command::Detect(o) => {
            let cfg = o.resolve()?;
            let s = commands::detect(&cfg)?;
            writeln!(
                out,
                "{}: {} timesteps, {} flagged (tau = {})",
                s.variant, s.timesteps, s.flagged, s.tau
            )?;
            if let Some(r) = &s.report {
                writeln!(out, "F1 {:.4}  F1-PA {:.4}", r.f1, r.f1_pa)?;
            }
            writeln!(out, "wrote {}", cfg.out.display())?;
        }
        Command::Evaluate(args) => {
            let inputs = commands::EvaluateInputs {
                scores: args.scores,
                labels: args.labels,
                train_scores: args.train_scores,
            };
            let (report, warnings) = commands::evaluate(&args.common.resolve()?, &inputs)?;
            for w in warnings {
                writeln!(err, "warning: {w}")?;
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        }
        Command::Ablate(o) => {
            write!(out, "{}", commands::ablate(&o.resolve()?)?.to_text())?;
        }
        Command::Synth(o) => {
            let (train, test) = commands::synth(&o.resolve()?)?;
            writeln!(out, "wrote {} and {}", train.display(), test.display())?;
        }
    }
    Ok(())
}

/// 1 when the failure is numerical divergence, 2 for usage and I/O errors.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<tsad_core::Error>())
        .any(tsad_core::Error::is_numerical);
    if numerical {
        1
    } else {
        2
    }
}
