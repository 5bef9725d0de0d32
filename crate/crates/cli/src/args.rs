use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "lfp", version, about = "Least favorable priors for finite-output channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a least favorable prior.
    Solve(SolveArgs),
    /// Solve for every value of --m or --levels and write figure data to --out.
    Sweep(SolveArgs),
    /// Print the cardinality bounds for N outputs, k moment constraints and n input dimensions.
    Bounds(BoundsArgs),
    /// Bayes risk and posterior of a prior read from JSON.
    RiskEval(RiskEvalArgs),
    /// Compare closed-form and finite-difference risk gradients.
    GradCheck(GradCheckArgs),
    /// Re-run the command recorded in a run manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Binomial,
    Qgauss,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Squared error.
    Sq,
    /// Generalized I-divergence (two-dimensional inputs).
    Gid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientArg {
    Auto,
    Analytic,
    Fd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProblemArgs {
    #[arg(long, value_enum)]
    pub channel: ChannelKind,
    /// Binomial trials. Sweeps accept `a..b` (inclusive) or `a,b,c`.
    #[arg(long)]
    pub m: Option<String>,
    /// Quantizer levels N, giving 2N + 1 outputs. Sweeps accept ranges like --m.
    #[arg(long)]
    pub levels: Option<String>,
    /// Tabulated channel as JSON with `outputs`, `grid_x` and `pmf_rows`.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LossKind::Sq)]
    pub loss: LossKind,
    /// Support interval, applied to every coordinate.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub omega: Option<Vec<f64>>,
    /// Input dimension; the channel acts on each coordinate independently.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    /// Atom count (default: tightest applicable cardinality bound).
    #[arg(long)]
    pub d: Option<usize>,
    /// Initial step size (default: 0.1 times the diameter of the support).
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = GradientArg::Auto)]
    pub gradient: GradientArg,
    /// Keep the support found with d atoms instead of searching for a smaller tied one.
    #[arg(long)]
    pub no_support_search: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Worker threads for restarts (default: one per core).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Directory for result files and the run manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundsArgs {
    /// Output alphabet size.
    #[arg(long = "N")]
    pub outputs: usize,
    /// Number of moment constraints.
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    /// Input dimension.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RiskEvalArgs {
    /// Prior as JSON with `points` and `masses`.
    #[arg(long)]
    pub prior: PathBuf,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GradCheckArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Prior to check at; a random one is drawn when absent.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Atoms of the random prior.
    #[arg(long, default_value_t = 4)]
    pub atoms: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub fd_step: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Output directory, replacing the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
