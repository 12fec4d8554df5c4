//! `audio-inr` command-line tool.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration or usage error, 3 numerical divergence.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use audio_inr::Error;
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "audio-inr", version, about = "Implicit neural representations of audio")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one target network to a single WAV file.
    FitInr {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Checkpoint path; history, metrics and reconstruction are written next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a hypernetwork on a directory of WAV files.
    TrainHyper {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Continue from a training checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render a checkpoint at an arbitrary number of samples.
    Render {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Clip to encode; required for hypernetwork checkpoints only.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a reconstruction against a reference.
    Eval {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write generated weight vectors of every clip in a directory as a CSV matrix.
    ExportWeights {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failure carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn io(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    /// Wraps a library error, prefixing `context` (usually the offending path).
    pub fn from_lib(context: impl fmt::Display, err: Error) -> Self {
        let code = match err {
            Error::Io(_)
            | Error::Format(_)
            | Error::UnsupportedFormat(_)
            | Error::CheckpointFormat(_)
            | Error::CorruptCheckpoint(_) => 1,
            Error::Divergence { .. } | Error::Numeric(_) => 3,
            Error::Shape(_) | Error::Argument(_) | Error::Config(_) | Error::UndefinedMetric(_) => 2,
        };
        Self { code, message: format!("{context}: {err}") }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::FitInr { input, config, out, seed } => commands::fit_inr(&input, config.as_deref(), &out, seed),
        Command::TrainHyper { data, config, out, resume, seed } => {
            commands::train_hyper(&data, config.as_deref(), &out, resume.as_deref(), seed)
        }
        Command::Render { checkpoint, input, samples, out } => {
            commands::render(&checkpoint, input.as_deref(), samples, &out)
        }
        Command::Eval { reference, est, out } => commands::eval(&reference, &est, &out),
        Command::ExportWeights { checkpoint, data, out } => commands::export_weights(&checkpoint, &data, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
