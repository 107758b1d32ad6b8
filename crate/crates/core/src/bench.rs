//! Benchmark harness: seeded trials of generate → learn → evaluate, with
//! summary statistics in a deterministic report and wall-clock timings
//! returned separately (so reports stay byte-identical across runs).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::generate::{random_network, GenerateError, NetworkShape};
use crate::learn::{evaluate, learn_tree, LearnError, LearnMethod};
use crate::rng::{stream, stream_rng};
use crate::scores::QtreeParams;
use crate::simulate::{drought_scenario, simulate_network, NoiseSpec, SimulateError};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("trial count must be at least 1")]
    NoTrials,

    #[error(transparent)]
    Generate(#[from] GenerateError),

    #[error(transparent)]
    Simulate(#[from] SimulateError),

    #[error(transparent)]
    Learn(#[from] LearnError),
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// How each trial's observations are produced from the generated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "regime")]
pub enum DataRegime {
    /// Exact simulation with optional noise and missingness.
    Simulated { noise: NoiseSpec },
    /// Two-regime mixture: base-level jitter rows and extreme event rows.
    /// Observations are log-transformed before learning — the usual working
    /// scale for flow-like data — so both learning methods see identical
    /// log-domain inputs.
    Drought { base_level: f64, extreme_rate: f64 },
}

/// Full description of a benchmark run. The whole struct is echoed in the
/// report so a run can be reproduced from its output alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub trials: usize,
    /// Nodes per generated network.
    pub d: usize,
    /// Observations per trial.
    pub n: usize,
    pub seed: u64,
    pub shape: NetworkShape,
    /// Edge coefficients are drawn log-uniformly from this range.
    pub coeff_range: (f64, f64),
    pub data: DataRegime,
    pub method: LearnMethod,
    /// Pin the learned root; `None` searches over all roots.
    pub root: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            trials: 10,
            d: 10,
            n: 500,
            seed: 1,
            shape: NetworkShape::Tree,
            coeff_range: (0.5, 1.5),
            data: DataRegime::Simulated {
                noise: NoiseSpec::noiseless(),
            },
            method: LearnMethod::Qtree(QtreeParams::default()),
            root: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// Sample mean and standard deviation (n−1 denominator; 0 for one trial).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub stddev: f64,
}

impl MetricSummary {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stddev = if n < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        MetricSummary { mean, stddev }
    }
}

/// Result of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    /// The derived seed this trial ran under.
    pub seed: u64,
    pub precision: f64,
    pub recall: f64,
    pub correct_edges: usize,
    pub truth_edges: usize,
}

/// Deterministic benchmark report: config echo, the per-trial seed rule,
/// summary statistics, and every trial's metrics. Contains no timestamps
/// or timings, so identical configs yield identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    /// How per-trial seeds are derived from `config.seed`.
    pub seed_rule: String,
    pub precision: MetricSummary,
    pub recall: MetricSummary,
    pub trials: Vec<TrialOutcome>,
}

/// Wall-clock timings, kept out of [`BenchReport`] so the report stays
/// reproducible; callers print these to stderr or discard them.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchTimings {
    pub per_trial_seconds: Vec<f64>,
    pub total_seconds: f64,
}

const SEED_RULE: &str =
    "trial_seed[t] = first u64 of the ChaCha8 stream keyed by (seed, stream=trial, index=t)";

/// Derived seed for trial `t` under the run seed. Generation, simulation,
/// and learning each consume distinct RNG streams internally, so one seed
/// per trial is safe to share across those stages.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    use rand::RngCore;
    stream_rng(seed, stream::TRIAL, t as u64).next_u64()
}

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

/// Runs the benchmark: per trial, generate a network, produce observations
/// under the configured regime, learn a tree, and score it against the
/// generating graph.
pub fn run_bench(config: &BenchConfig) -> Result<(BenchReport, BenchTimings), BenchError> {
    if config.trials == 0 {
        return Err(BenchError::NoTrials);
    }
    let started = Instant::now();
    let mut outcomes = Vec::with_capacity(config.trials);
    let mut per_trial_seconds = Vec::with_capacity(config.trials);
    for t in 0..config.trials {
        let trial_started = Instant::now();
        let seed = trial_seed(config.seed, t);
        let net = random_network(config.d, config.shape, config.coeff_range, seed)?;
        let obs = match &config.data {
            DataRegime::Simulated { noise } => simulate_network(&net, config.n, noise, seed)?,
            DataRegime::Drought {
                base_level,
                extreme_rate,
            } => drought_scenario(&net, config.n, *base_level, *extreme_rate, seed)?
                .observations
                .to_log()?,
        };
        let learned = learn_tree(&obs, &config.method, config.root)?;
        let report = evaluate(&learned.tree, net.dag())?;
        outcomes.push(TrialOutcome {
            trial: t,
            seed,
            precision: report.precision,
            recall: report.recall,
            correct_edges: report.correct.len(),
            truth_edges: report.truth_edge_count,
        });
        per_trial_seconds.push(trial_started.elapsed().as_secs_f64());
    }
    let precision = MetricSummary::from_samples(
        &outcomes.iter().map(|o| o.precision).collect::<Vec<_>>(),
    );
    let recall =
        MetricSummary::from_samples(&outcomes.iter().map(|o| o.recall).collect::<Vec<_>>());
    Ok((
        BenchReport {
            config: config.clone(),
            seed_rule: SEED_RULE.to_string(),
            precision,
            recall,
            trials: outcomes,
        },
        BenchTimings {
            per_trial_seconds,
            total_seconds: started.elapsed().as_secs_f64(),
        },
    ))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
