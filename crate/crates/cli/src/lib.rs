//! Experiment runner behind the `invbo` binary.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] invbo::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "invbo", version, about = "Group-invariant Bayesian optimization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every benchmark × mode × seed cell of an experiment config.
    RunBo {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Run only this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Empirical Gram spectra for a kernel/group/box config.
    Spectra {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Project a random max-kernel Gram onto the PSD cone and check it
    /// against an eigen-clipping oracle.
    PsdCheck {
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Group acting on `[−1, 1]^4`: `permutations` (2 blocks of 2),
        /// `signflips` or `hyperoctahedral`.
        #[arg(long, default_value = "permutations")]
        group: String,
        #[arg(long, default_value_t = 1.0)]
        lengthscale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print domain, group, group order and known optimum of a benchmark.
    BenchInfo { name: String },
}

/// Runs a parsed command, writing human-readable output to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    match cli.command {
        Command::RunBo {
            config,
            out,
            workers,
            seed,
        } => commands::run_bo(&config, out, workers, seed, stdout),
        Command::Spectra {
            config,
            out,
            workers,
            seed,
        } => commands::spectra(&config, out, workers, seed, stdout),
        Command::PsdCheck {
            n,
            seed,
            group,
            lengthscale,
            out,
        } => commands::psd_check(n, seed, &group, lengthscale, out, stdout),
        Command::BenchInfo { name } => commands::bench_info(&name, stdout),
    }
}
