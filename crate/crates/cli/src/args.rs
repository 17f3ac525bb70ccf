use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "oclust", version, about = "Outlier trimming for Gaussian mixture clustering")]
pub struct Cli {
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true, env = "OCLUST_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trim outliers from a CSV and write the KL trace, labels and summary.
    #[command(alias = "run")]
    Oclust(OclustArgs),
    /// Generate one of the five benchmark models with uniform outliers.
    Simulate(SimulateArgs),
    /// Relative gap between the hard-assignment and mixture log-likelihood by separation.
    SeparationStudy(SeparationArgs),
    /// Compare predicted labels with the truth columns of a simulated CSV.
    Score(ScoreArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Refit,
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BinMethodArg {
    EqualProbability,
    EqualWidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProportionsArg {
    Equal,
    Unequal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RejectionArg {
    /// Far from every cluster.
    All,
    /// Far from the cluster with the nearest mean.
    Nearest,
}

#[derive(Debug, Args)]
pub struct OclustArgs {
    /// Headed numeric CSV; `true_label` and `is_outlier` columns are ignored.
    pub input: PathBuf,
    #[arg(short = 'g', long)]
    pub clusters: usize,
    /// Upper bound F on outliers; defaults to ceil(0.125 n).
    #[arg(short = 'F', long)]
    pub max_outliers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of KL bins; defaults to max(10, ceil(sqrt(n))).
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_enum, default_value = "equal-probability")]
    pub bin_method: BinMethodArg,
    #[arg(long, value_enum, default_value = "refit")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// I, II, III, IV or V.
    #[arg(long)]
    pub model: String,
    #[arg(long = "dim")]
    pub dim: usize,
    #[arg(long, value_enum, default_value = "equal")]
    pub proportions: ProportionsArg,
    #[arg(long)]
    pub n_good: usize,
    #[arg(long)]
    pub n_out: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "all")]
    pub rejection: RejectionArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SeparationArgs {
    /// Comma-separated dimensions.
    #[arg(long, default_value = "2,4,6")]
    pub dims: String,
    /// `start:stop:step` or a comma-separated list of J* values.
    #[arg(long, default_value = "-0.9:0.9:0.1", allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// `labels.csv` written by the oclust command.
    #[arg(long)]
    pub pred: PathBuf,
    /// CSV with an `is_outlier` or `true_label` column.
    #[arg(long)]
    pub truth: PathBuf,
}
