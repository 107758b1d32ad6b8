//! Command-line surface: subcommands, flags, and their defaults.
//!
//! Node indices on the command line and in all outputs are 1-based. Every
//! randomized subcommand requires an explicit `--seed`. A `--config` JSON
//! file may supply flag defaults per subcommand; explicit flags win.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "tropex",
    version,
    about = "Max-linear extreme-value models: simulation, tree learning, \
             conditional sampling, and independence testing"
)]
pub struct Cli {
    /// JSON file of flag defaults, keyed by subcommand name
    /// (e.g. {"learn": {"r": 0.3, "min-support": 10}}).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate observations from a model (loaded or freshly generated).
    Simulate(SimulateArgs),
    /// Learn a spanning tree from an observation CSV.
    Learn(LearnArgs),
    /// Score an estimated tree against a ground-truth edge list.
    Eval(EvalArgs),
    /// Draw exact conditional samples given fixed coordinates.
    Sample(SampleArgs),
    /// Evaluate the joint CDF and tail-dependence at a point.
    Cdf(CdfArgs),
    /// Monte-Carlo conditional-independence test between node blocks.
    Ci(CiArgs),
    /// Run seeded generate-learn-evaluate benchmark trials.
    Bench(BenchArgs),
}

// ---------------------------------------------------------------------------
// Shared flag enums
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeArg {
    Tree,
    Dag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Qtree,
    Corr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeArg {
    Simulated,
    Drought,
}

// ---------------------------------------------------------------------------
// Subcommand flags
// ---------------------------------------------------------------------------

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Model JSON to simulate from (alternative to --gen-nodes).
    #[arg(long, value_name = "FILE", conflicts_with = "gen_nodes")]
    pub model: Option<PathBuf>,

    /// Generate a random model with this many nodes instead of loading one.
    #[arg(long, value_name = "D")]
    pub gen_nodes: Option<usize>,

    /// Shape of the generated graph.
    #[arg(long, value_enum, default_value = "tree")]
    pub gen_shape: ShapeArg,

    /// Edge density of a generated DAG (ignored for trees).
    #[arg(long, default_value_t = 0.5)]
    pub gen_density: f64,

    /// Lower end of the log-uniform edge-coefficient range.
    #[arg(long, default_value_t = 0.5)]
    pub gen_coeff_min: f64,

    /// Upper end of the log-uniform edge-coefficient range.
    #[arg(long, default_value_t = 1.5)]
    pub gen_coeff_max: f64,

    /// Write the model that produced the data (JSON).
    #[arg(long, value_name = "FILE")]
    pub save_model: Option<PathBuf>,

    /// Number of observation rows.
    #[arg(long)]
    pub n: usize,

    /// Multiplicative log-normal noise level (0 = noise-free).
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,

    /// Missing-completely-at-random deletion rate in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub mcar: f64,

    /// Extra deletion probability for entries above the extreme quantile.
    #[arg(long, default_value_t = 0.0)]
    pub extreme_missing_prob: f64,

    /// Per-node quantile level defining "extreme" entries.
    #[arg(long, default_value_t = 0.9)]
    pub extreme_quantile: f64,

    /// Two-regime mixture: base-level jitter rows plus extreme event rows.
    #[arg(long)]
    pub drought: bool,

    /// Base flow level of drought rows.
    #[arg(long, default_value_t = 0.01)]
    pub base_level: f64,

    /// Probability that a drought-regime row is an extreme event.
    #[arg(long, default_value_t = 0.1)]
    pub extreme_rate: f64,

    /// RNG seed.
    #[arg(long)]
    pub seed: u64,

    /// Output observation CSV.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct LearnArgs {
    /// Observation CSV (header of node labels; empty cells = missing).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,

    /// Scoring method.
    #[arg(long, value_enum, default_value = "qtree")]
    pub method: MethodArg,

    /// Fraction of smallest log-ratios scored per node pair (qtree).
    #[arg(long, default_value_t = 0.2)]
    pub r: f64,

    /// Minimum overlapping samples for a usable score entry.
    #[arg(long, default_value_t = 20)]
    pub min_support: usize,

    /// Quantile of pairwise log-ratios used as the coefficient estimate.
    #[arg(long, default_value_t = 0.05)]
    pub coeff_quantile: f64,

    /// Keep only rows whose maximum exceeds this quantile of row maxima.
    #[arg(long, value_name = "Q")]
    pub extreme_filter: Option<f64>,

    /// Pin the tree root (1-based node index); omit to search all roots.
    #[arg(long, value_name = "NODE")]
    pub root: Option<usize>,

    /// Log-transform values while reading (rejects nonpositive cells).
    #[arg(long)]
    pub log: bool,

    /// Output tree JSON.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Estimated tree JSON (as written by `learn`).
    #[arg(long, value_name = "FILE")]
    pub estimate: PathBuf,

    /// Ground-truth edge list: one `parent child` pair per line.
    #[arg(long, value_name = "FILE")]
    pub truth: PathBuf,

    /// Write a colored DOT rendering (blue correct, red wrong, purple
    /// reversed, gray dashed missed).
    #[arg(long, value_name = "FILE")]
    pub dot: Option<PathBuf>,

    /// Write the metrics report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    /// Model JSON.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,

    /// Conditioned coordinates as `node=value` pairs, e.g. "3=4.0,5=2.5"
    /// (1-based node indices).
    #[arg(long, value_name = "PAIRS")]
    pub condition: String,

    /// Number of draws.
    #[arg(long)]
    pub n: usize,

    /// RNG seed.
    #[arg(long)]
    pub seed: u64,

    /// Output CSV (first column: 1-based scenario id of each draw).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CdfArgs {
    /// Model JSON.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,

    /// Query point: comma-separated values, one per node, e.g. "1,2,6".
    #[arg(long, value_name = "VALUES")]
    pub point: String,

    /// Write the result JSON here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CiArgs {
    /// Model JSON.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,

    /// First node block: comma-separated 1-based indices, e.g. "1" or "1,4".
    #[arg(long = "i", value_name = "NODES")]
    pub block_i: String,

    /// Second node block.
    #[arg(long = "j", value_name = "NODES")]
    pub block_j: String,

    /// Conditioning context as `node=value` pairs; omit for the
    /// unconditional test.
    #[arg(long = "k", value_name = "PAIRS")]
    pub context: Option<String>,

    /// Conditional sample size.
    #[arg(long, default_value_t = 2000)]
    pub m: usize,

    /// Number of permutations for the p-value.
    #[arg(long, default_value_t = 999)]
    pub perms: usize,

    /// RNG seed.
    #[arg(long)]
    pub seed: u64,

    /// Write the result JSON here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Number of trials.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,

    /// Nodes per generated network.
    #[arg(long, default_value_t = 10)]
    pub d: usize,

    /// Observations per trial.
    #[arg(long, default_value_t = 500)]
    pub n: usize,

    /// RNG seed; per-trial seeds are derived from it.
    #[arg(long)]
    pub seed: u64,

    /// Shape of generated networks.
    #[arg(long, value_enum, default_value = "tree")]
    pub shape: ShapeArg,

    /// Edge density of generated DAGs (ignored for trees).
    #[arg(long, default_value_t = 0.5)]
    pub density: f64,

    /// Lower end of the log-uniform edge-coefficient range.
    #[arg(long, default_value_t = 0.5)]
    pub coeff_min: f64,

    /// Upper end of the log-uniform edge-coefficient range.
    #[arg(long, default_value_t = 1.5)]
    pub coeff_max: f64,

    /// Data regime for each trial.
    #[arg(long, value_enum, default_value = "simulated")]
    pub regime: RegimeArg,

    /// Noise level for the simulated regime.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,

    /// MCAR deletion rate for the simulated regime.
    #[arg(long, default_value_t = 0.0)]
    pub mcar: f64,

    /// Base flow level for the drought regime.
    #[arg(long, default_value_t = 0.01)]
    pub base_level: f64,

    /// Extreme-event probability for the drought regime.
    #[arg(long, default_value_t = 0.1)]
    pub extreme_rate: f64,

    /// Learning method under test.
    #[arg(long, value_enum, default_value = "qtree")]
    pub method: MethodArg,

    /// Fraction of smallest log-ratios scored per node pair (qtree).
    #[arg(long, default_value_t = 0.2)]
    pub r: f64,

    /// Minimum overlapping samples for a usable score entry.
    #[arg(long, default_value_t = 20)]
    pub min_support: usize,

    /// Keep only rows whose maximum exceeds this quantile of row maxima.
    #[arg(long, value_name = "Q")]
    pub extreme_filter: Option<f64>,

    /// Pin the learned root (1-based); omit to search all roots.
    #[arg(long, value_name = "NODE")]
    pub root: Option<usize>,

    /// Output report JSON.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}
