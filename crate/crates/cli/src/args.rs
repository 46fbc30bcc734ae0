//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "dirl", version, about = "Deterministic identification codes: construction, error evaluation and rate bounds")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Channel file (JSON).
    #[arg(long, global = true)]
    pub channel: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized steps.
    #[arg(long, global = true, env = "DIRL_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a DI code for a channel.
    Construct(ConstructArgs),
    /// Measure the errors of a code.
    Evaluate(EvaluateArgs),
    /// Tabulate rate bounds over a grid.
    Bounds(BoundsArgs),
    /// Packing, covering and dimension tables for a channel's output set.
    Geometry(GeometryArgs),
    /// Channel file utilities.
    #[command(subcommand)]
    Channel(ChannelCommand),
}

#[derive(Debug, Subcommand)]
pub enum ChannelCommand {
    /// Validate a channel file and print a summary.
    Check,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeModeArg {
    Greedy,
    Linear,
    Auto,
}

#[derive(Debug, Args, Serialize)]
pub struct ConstructArgs {
    /// Blocklength.
    #[arg(long)]
    pub n: usize,
    /// Target error exponent (natural units).
    #[arg(long)]
    pub e: f64,
    /// Distance fraction.
    #[arg(long, default_value_t = 0.5, conflicts_with = "t_grid")]
    pub t: f64,
    /// Try several distance fractions and keep the highest rate.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = CodeModeArg::Auto)]
    pub code_mode: CodeModeArg,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    ExactDp,
    MonteCarlo,
    PairBound,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Code JSON written by `construct`.
    #[arg(long)]
    pub code: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::ExactDp)]
    pub method: MethodArg,
    /// Monte Carlo samples per codeword.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Ordered pairs evaluated exactly before falling back to analytic ceilings.
    #[arg(long, default_value_t = dirl::evaluator::DEFAULT_PAIR_BUDGET)]
    pub pair_budget: usize,
    /// Quantization step of the exact DP, in bits.
    #[arg(long, default_value_t = dirl::evaluator::DEFAULT_STEP)]
    pub step: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeArg {
    None,
    PerLogN,
    MinusLoglog,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    /// Formula ids, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub formula: Vec<String>,
    /// Blocklengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Log-spaced blocklengths as LO:HI:COUNT, appended to --n.
    #[arg(long)]
    pub n_range: Option<String>,
    /// Exponents, comma separated, or `inv-n` for E = 1/n.
    #[arg(long, default_value = "inv-n")]
    pub e: String,
    /// A number, or one of `fig2`, `inv-log`, `quarter-root`.
    #[arg(long, default_value = "0.5")]
    pub t: String,
    /// A number, or one of `inv-n`, `inv-log`.
    #[arg(long, default_value = "0")]
    pub eta: String,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Dimension used by the dimension-based formulas.
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
    /// Output alphabet size when no channel is given.
    #[arg(long, default_value_t = 2)]
    pub y: usize,
    /// Bernoulli base.
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0.1)]
    pub omega: f64,
    /// Bounded error of the Stein-regime formulas.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta_trunc: f64,
    #[arg(long)]
    pub delta_part: Option<f64>,
    /// Average cost budget.
    #[arg(long, default_value_t = 0.0)]
    pub power: f64,
    #[arg(long, value_enum)]
    pub normalize: Option<NormalizeArg>,
    /// Also write bounds.svg.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskArg {
    Packing,
    Covering,
    Dimension,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricArg {
    Euclidean,
    Tv,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Greedy,
    Exact,
    Auto,
}

#[derive(Debug, Args, Serialize)]
pub struct GeometryArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Radii, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub radii: Vec<f64>,
    /// Euclidean on square roots, or total variation on the distributions.
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
}
