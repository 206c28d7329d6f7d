//! Command-line front end: each subcommand wraps one pipeline stage, and
//! `run-all` chains them end to end into one output directory.
//!
//! Exit codes: 0 success, 2 usage/configuration error, 3 data/format error,
//! 4 numerical error. Diagnostics go to stderr.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use imuda_core::error::Error;

#[derive(Parser)]
#[command(name = "imuda", version, about = "Domain adaptation via compact internal distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic source/target pair under a covariate shift.
    MakeSynth {
        /// twomoons | blobs
        #[arg(long)]
        task: String,
        /// rot:DEG | trans:DX,DY | scale:C
        #[arg(long)]
        shift: String,
        /// Points per domain (two-moons) or per class (blobs).
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Directory for source.csv, target.csv, target_labels.csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        /// Blobs: class count.
        #[arg(long, default_value_t = 2)]
        classes: usize,
        /// Blobs: feature dimension.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Blobs: distance between adjacent cluster centers.
        #[arg(long, default_value_t = 8.0)]
        separation: f64,
    },
    /// Pretrain an encoder/classifier on a labeled source CSV.
    Pretrain {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        source: PathBuf,
        /// Checkpoint path.
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch report CSV; defaults to `<out>.report.csv`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Estimate the class-conditional Gaussian mixture of source embeddings.
    EstimateGmm {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Covariance regularization; data-driven default when omitted.
        #[arg(long)]
        eps: Option<f64>,
        /// Diagonal covariances only.
        #[arg(long)]
        diagonal: bool,
    },
    /// Sample a confident pseudo-dataset from a mixture file.
    GenPseudo {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        gmm: PathBuf,
        #[arg(long)]
        tau: f64,
        /// Number of accepted points to collect.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        max_attempt_factor: usize,
    },
    /// Adapt a pretrained model to an unlabeled target domain.
    Adapt {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        source: PathBuf,
        /// Target CSV; labels, if present, are used for reporting only.
        #[arg(long)]
        target: PathBuf,
        /// Pseudo-dataset CSV; required unless --baseline-swd.
        #[arg(long)]
        pseudo: Option<PathBuf>,
        /// Two-term direct source-target alignment instead of the
        /// pseudo-dataset objective.
        #[arg(long, conflicts_with_all = ["pseudo", "drop_term3", "drop_term4"])]
        baseline_swd: bool,
        /// Drop the target-pseudo alignment term.
        #[arg(long, conflicts_with = "drop_term4")]
        drop_term3: bool,
        /// Drop the source-pseudo alignment term.
        #[arg(long)]
        drop_term4: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Evaluate a checkpoint on a labeled CSV.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sliced Wasserstein distance between two CSV point sets.
    Swd {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 100)]
        projections: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Report the computable error-bound terms for a model and datasets.
    DiagnoseBound {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        pseudo: PathBuf,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 100)]
        projections: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report to a file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write embeddings (optionally reduced to 2-D by PCA) as CSV.
    ExportEmbeddings {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Project onto the top-2 principal components.
        #[arg(long)]
        pca2: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the whole pipeline (pretrain, mixture, pseudo, adapt, eval) into
    /// the configured output directory.
    RunAll {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_) => ExitCode::from(2),
        Error::Input(_)
        | Error::AlignmentBatch(_)
        | Error::Parse { .. }
        | Error::Format(_)
        | Error::OracleSize(_)
        | Error::Degenerate(_)
        | Error::Io(_) => ExitCode::from(3),
        Error::Numerical(_) | Error::Estimation(_) | Error::Generation(_) => ExitCode::from(4),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
