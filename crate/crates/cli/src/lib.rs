// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: experiment orchestration over tensor files.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::ConfigMap;
pub use error::{CliError, CliResult};
pub use manifest::{Manifest, MANIFEST_FILE};

#[derive(Debug, Parser)]
#[command(name = "lrood", version, about = "Likelihood-ratio OOD detection experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the `seed` key of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Train both heads on two overlapping Gaussians and tabulate them on a grid.
    ToyGaussian(CommonArgs),
    /// Train an estimator on pixels from feature/label files.
    Train(CommonArgs),
    /// Write upsampled, blurred likelihood-ratio maps for feature files.
    Score(CommonArgs),
    /// Average precision and FPR at 95% TPR of score files against labels.
    Eval(CommonArgs),
    /// Bin predicted probability by distance to the nearest class mean.
    Extrapolate(CommonArgs),
    /// Generate synthetic scenes with pasted outlier objects.
    GenSynthetic(CommonArgs),
}

type Handler = fn(ConfigMap, &Path, Option<u64>) -> CliResult<Manifest>;

/// Runs one subcommand and returns the manifest it wrote.
pub fn run(command: &Command) -> CliResult<Manifest> {
    let (args, f): (&CommonArgs, Handler) = match command {
        Command::ToyGaussian(a) => (a, commands::toy_gaussian),
        Command::Train(a) => (a, commands::train_cmd),
        Command::Score(a) => (a, commands::score),
        Command::Eval(a) => (a, commands::eval),
        Command::Extrapolate(a) => (a, commands::extrapolate),
        Command::GenSynthetic(a) => (a, commands::gen_synthetic),
    };
    let cfg = ConfigMap::load(args.config.as_deref())?;
    f(cfg, &args.out, args.seed)
}
