//! Command-line front end: runs lifecycle experiments, writes CSV results,
//! renders SVG charts and runs the gradient check.

pub mod commands;
pub mod config;
pub mod svg;
pub mod table;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{CaseKind, ConfigError, RunSettings};

#[derive(Debug, Parser)]
#[command(
    name = "physinet",
    version,
    about = "Hybrid physics + neural network digital twin experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the streaming lifecycle for one case over one or more seeds.
    Run(RunArgs),
    /// Render a per-step CSV as an SVG chart.
    Plot(PlotArgs),
    /// Compare analytic and finite-difference network gradients.
    Gradcheck(GradcheckArgs),
    /// Write one batch of synthetic measurements as CSV.
    Sample(SampleArgs),
}

/// Settings shared by `run` and `sample`. Flags override the config file,
/// which overrides the defaults.
#[derive(Debug, Args)]
pub struct SettingsArgs {
    #[arg(long, value_enum)]
    pub case: Option<CaseKind>,
    /// Flat JSON object using the same keys as `--set`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set noise-std=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub settings: SettingsArgs,
    /// Comma-separated seeds.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub points_per_step: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub minibatch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub test_size: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Start the hybrid model from a saved model JSON instead of a fresh init.
    #[arg(long)]
    pub init_model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    Mse,
    WeightRatio,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// A `steps_*.csv` file written by `run`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub cases: usize,
    /// Perturb one analytic gradient entry; used to exercise the failure path.
    #[arg(long, hide = true)]
    pub corrupt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub settings: SettingsArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 80)]
    pub points: usize,
    #[arg(long)]
    pub output: PathBuf,
}
