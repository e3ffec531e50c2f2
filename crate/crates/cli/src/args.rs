use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use latent_hazard::Criterion;

/// Latent state hazard model: simulate, fit, predict and plan warnings.
#[derive(Debug, Parser)]
#[command(name = "lshm", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate lifetimes and write them as a lifetime CSV.
    Simulate(SimulateArgs),
    /// Fit a model to a lifetime CSV and write the model JSON.
    Fit(FitArgs),
    /// Write per-step hazard components for every lifetime.
    Predict(PredictArgs),
    /// Train a warning threshold and write it with a cost report.
    Warn(WarnArgs),
    /// Write the missed-operating-time vs unexpected-failure curve.
    Tradeoff(TradeoffArgs),
    /// Cox–Snell residuals, K–S test and hazard rank percentiles.
    Evaluate(EvaluateArgs),
    /// Cross-validated warning cost of the latent model against the Cox model.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Latent,
    Hmm,
    Bian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// One standard normal covariate, α0 = −14, α1 = 5, β0 = −7, β1 = 0.5.
    Sec61,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Latent,
    Cox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerKind {
    /// Coordinate descent.
    Cd,
    /// Full-gradient descent with backtracking.
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LineSearchKind {
    Derivative,
    Golden,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct Common {
    /// Flat JSON file of flag values; flags given on the command line win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "latent")]
    pub model: Generator,
    /// Truth for the latent generator.
    #[arg(long, value_enum, default_value = "sec61")]
    pub preset: Preset,
    /// Number of lifetimes.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Censoring cap in steps.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Brownian coefficient of the degradation signal (bian).
    #[arg(long)]
    pub noise_scale: Option<f64>,
    /// Failure threshold of the degradation signal (bian).
    #[arg(long)]
    pub failure_threshold: Option<f64>,
    #[arg(long, short, value_name = "CSV")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PenaltyArgs {
    /// Penalty on the transient coefficients (the Cox coefficients for cox).
    #[arg(long, default_value_t = 0.1)]
    pub penalty_alpha: f64,
    /// Penalty on the latent coefficients.
    #[arg(long, default_value_t = 0.1)]
    pub penalty_beta: f64,
    /// Penalize the intercepts as well.
    #[arg(long)]
    pub penalize_intercepts: bool,
}

#[derive(Debug, Args)]
pub struct OptimizerArgs {
    #[arg(long, value_enum, default_value = "cd")]
    pub optimizer: OptimizerKind,
    #[arg(long, value_enum, default_value = "derivative")]
    pub line_search: LineSearchKind,
    /// Objective change tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    /// Training lifetime CSV.
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "latent")]
    pub model: ModelKind,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Min-max scale covariates using the training data.
    #[arg(long)]
    pub normalize: bool,
    /// Fill null covariate cells from the previous step of the same lifetime.
    #[arg(long)]
    pub forward_fill: bool,
    #[arg(long, short, value_name = "JSON")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_name = "JSON")]
    pub model_file: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub forward_fill: bool,
    #[arg(long, short, value_name = "CSV")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    /// Ideal warning lead time in steps.
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    /// Cost per step of a late warning.
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    /// Cost per step of an early warning.
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    #[arg(long, default_value = "lambda")]
    pub criterion: Criterion,
    /// Charge censored lifetimes for operating time lost to early warnings.
    #[arg(long)]
    pub include_censored: bool,
}

#[derive(Debug, Args)]
pub struct WarnArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_name = "JSON")]
    pub model_file: Option<PathBuf>,
    /// Lifetimes the threshold is trained on.
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    /// Lifetimes the report is written for; defaults to the training data.
    #[arg(long, value_name = "CSV")]
    pub test: Option<PathBuf>,
    #[command(flatten)]
    pub cost: CostArgs,
    #[arg(long)]
    pub forward_fill: bool,
    /// Threshold JSON.
    #[arg(long, short, value_name = "JSON")]
    pub out: Option<PathBuf>,
    /// Per-lifetime cost report.
    #[arg(long, value_name = "CSV")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TradeoffArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_name = "JSON")]
    pub model_file: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "lambda")]
    pub criterion: Criterion,
    #[arg(long)]
    pub forward_fill: bool,
    #[arg(long, short, value_name = "CSV")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_name = "JSON")]
    pub model_file: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "lambda")]
    pub criterion: Criterion,
    /// Steps before failure at which ranks are computed, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub offsets: Vec<usize>,
    #[arg(long)]
    pub forward_fill: bool,
    /// Directory receiving residuals.csv, ks.csv and rank.csv.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub cost: CostArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Skip min-max scaling of covariates within each fold.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub forward_fill: bool,
    /// Cost table CSV.
    #[arg(long, short, value_name = "CSV")]
    pub out: Option<PathBuf>,
}
