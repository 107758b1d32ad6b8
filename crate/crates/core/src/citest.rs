//! Monte-Carlo test of context-specific conditional independence.
//!
//! Answers "is X_I independent of X_J given X_K = x_K?" by sampling the
//! conditional law, computing distance correlation between the rank-
//! transformed blocks, and calibrating it with permutations of the J
//! block. The result is statistical evidence, not a symbolic decision:
//! contexts whose fixed part drowns all randomness are reported as
//! degenerate (independent by constancy) instead.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::model::MaxLinearNetwork;
use crate::representation::{conditional_representation, RepresentationError};
use crate::sampler::{sample_conditional, SamplerError};
use crate::scenarios::{factor_bounds, ConditioningEvent};
use crate::simulate::{simulate_network, NoiseSpec, SimulateError};
use crate::stats::average_ranks;
use crate::rng::{stream, stream_rng};

/// A coordinate is flagged constant-dominant when its fixed part reaches
/// this quantile of every random contribution.
pub const CONSTANT_DOMINANT_LEVEL: f64 = 1.0 - 1e-6;

/// Fewest conditional samples accepted for a test.
pub const MIN_SAMPLES: usize = 200;

/// Fewest permutations accepted for a p-value.
pub const MIN_PERMUTATIONS: usize = 499;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CiError {
    #[error("block {block} must name at least one node")]
    EmptyBlock { block: char },

    #[error("node {node} appears in more than one of I, J, K (or twice in a block)")]
    OverlappingBlocks { node: usize },

    #[error("node {node} is out of range for {d} nodes")]
    NodeOutOfRange { node: usize, d: usize },

    #[error("conditional test needs at least {MIN_SAMPLES} samples, got {m}")]
    TooFewSamples { m: usize },

    #[error("p-value needs at least {MIN_PERMUTATIONS} permutations, got {perms}")]
    TooFewPermutations { perms: usize },

    #[error(transparent)]
    Sampler(#[from] SamplerError),

    #[error(transparent)]
    Simulate(#[from] SimulateError),

    #[error(transparent)]
    Representation(#[from] RepresentationError),
}

// ---------------------------------------------------------------------------
// Query and result
// ---------------------------------------------------------------------------

/// Dependence statistic choices for the test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependenceStatistic {
    /// Distance correlation of the average-rank-transformed blocks.
    #[default]
    RankDistanceCorrelation,
}

/// The question "is X_I independent of X_J given X_K = x_K?" with its
/// Monte-Carlo budget. An empty event asks about unconditional
/// independence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiQuery {
    pub block_i: Vec<usize>,
    pub block_j: Vec<usize>,
    pub event: ConditioningEvent,
    pub samples: usize,
    pub permutations: usize,
    pub statistic: DependenceStatistic,
}

impl CiQuery {
    /// A query with the default statistic and the minimum honest budget.
    pub fn new(block_i: Vec<usize>, block_j: Vec<usize>, event: ConditioningEvent) -> Self {
        CiQuery {
            block_i,
            block_j,
            event,
            samples: 2000,
            permutations: MIN_PERMUTATIONS,
            statistic: DependenceStatistic::RankDistanceCorrelation,
        }
    }

    fn validate(&self, d: usize) -> Result<(), CiError> {
        if self.block_i.is_empty() {
            return Err(CiError::EmptyBlock { block: 'I' });
        }
        if self.block_j.is_empty() {
            return Err(CiError::EmptyBlock { block: 'J' });
        }
        let mut seen = vec![false; d];
        for &node in self
            .block_i
            .iter()
            .chain(&self.block_j)
            .chain(self.event.nodes())
        {
            if node >= d {
                return Err(CiError::NodeOutOfRange { node, d });
            }
            if seen[node] {
                return Err(CiError::OverlappingBlocks { node });
            }
            seen[node] = true;
        }
        if self.samples < MIN_SAMPLES {
            return Err(CiError::TooFewSamples { m: self.samples });
        }
        if self.permutations < MIN_PERMUTATIONS {
            return Err(CiError::TooFewPermutations {
                perms: self.permutations,
            });
        }
        Ok(())
    }
}

/// Outcome of [`ci_test_mc`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiResult {
    /// Distance correlation of the rank blocks (0 when degenerate).
    pub statistic: f64,
    /// Permutation p-value, `(1 + #{perm >= observed}) / (1 + P)`.
    pub p_value: f64,
    pub samples_used: usize,
    /// Nodes whose conditional value is (near-)constant in this context.
    pub degenerate_nodes: Vec<usize>,
    /// True when the result is "independent by constancy" rather than a
    /// Monte-Carlo verdict.
    pub degenerate: bool,
}

// ---------------------------------------------------------------------------
// The test
// ---------------------------------------------------------------------------

/// Runs the Monte-Carlo conditional-independence test. Deterministic under
/// `seed`: samples come from the conditional sampler (or the plain network
/// simulator when the event is empty), and each permutation draws its own
/// RNG stream, so the p-value does not depend on evaluation order.
pub fn ci_test_mc(
    net: &MaxLinearNetwork,
    query: &CiQuery,
    seed: u64,
) -> Result<CiResult, CiError> {
    let d = net.node_count();
    query.validate(d)?;

    // Context constancy: a coordinate whose fixed part reaches the top
    // quantile of every random contribution carries (almost) no
    // information, and rank statistics on it are meaningless.
    if !query.event.is_empty() {
        let flagged = constant_dominant_nodes(net, &query.event)?;
        let hit: Vec<usize> = flagged
            .into_iter()
            .filter(|n| query.block_i.contains(n) || query.block_j.contains(n))
            .collect();
        if !hit.is_empty() {
            return Ok(CiResult {
                statistic: 0.0,
                p_value: 1.0,
                samples_used: 0,
                degenerate_nodes: hit,
                degenerate: true,
            });
        }
    }

    // Draw the context sample.
    let m = query.samples;
    let columns = |nodes: &[usize]| -> Result<Vec<Vec<f64>>, CiError> {
        if query.event.is_empty() {
            let obs = simulate_network(net, m, &NoiseSpec::noiseless(), seed)?;
            Ok(nodes
                .iter()
                .map(|&node| {
                    (0..m)
                        .map(|t| obs.row(t)[node].expect("noiseless simulation is complete"))
                        .collect()
                })
                .collect())
        } else {
            let draws = sample_conditional(net.star(), &query.event, net.innovations(), m, seed)?;
            Ok(nodes
                .iter()
                .map(|&node| draws.iter().map(|dr| dr.values[node]).collect())
                .collect())
        }
    };
    let cols_i = columns(&query.block_i)?;
    let cols_j = columns(&query.block_j)?;

    // Empirical constancy fallback: a column with a single realized value
    // has zero rank variance, so the statistic is undefined.
    let mut flat_nodes: Vec<usize> = Vec::new();
    for (pos, col) in cols_i.iter().enumerate() {
        if col.iter().all(|&v| v == col[0]) {
            flat_nodes.push(query.block_i[pos]);
        }
    }
    for (pos, col) in cols_j.iter().enumerate() {
        if col.iter().all(|&v| v == col[0]) {
            flat_nodes.push(query.block_j[pos]);
        }
    }
    if !flat_nodes.is_empty() {
        flat_nodes.sort_unstable();
        return Ok(CiResult {
            statistic: 0.0,
            p_value: 1.0,
            samples_used: m,
            degenerate_nodes: flat_nodes,
            degenerate: true,
        });
    }

    let DependenceStatistic::RankDistanceCorrelation = query.statistic;
    let ranks_i: Vec<Vec<f64>> = cols_i.iter().map(|c| average_ranks(c)).collect();
    let ranks_j: Vec<Vec<f64>> = cols_j.iter().map(|c| average_ranks(c)).collect();

    let centered_a = CenteredDistances::build(&ranks_i, m);
    let dvar_a = centered_a.variance();
    let dvar_b = distance_variance(&ranks_j, m);

    let identity: Vec<usize> = (0..m).collect();
    let dcov_obs = centered_a.covariance_with(&ranks_j, &identity);
    let denom = (dvar_a * dvar_b).sqrt();
    let statistic = if denom > 0.0 {
        (dcov_obs.max(0.0) / denom).sqrt()
    } else {
        0.0
    };

    let mut exceed = 0usize;
    let mut indices: Vec<usize> = (0..m).collect();
    for t in 0..query.permutations {
        let mut rng = stream_rng(seed, stream::PERMUTATION, t as u64);
        indices.shuffle(&mut rng);
        if centered_a.covariance_with(&ranks_j, &indices) >= dcov_obs {
            exceed += 1;
        }
    }
    let p_value = (1 + exceed) as f64 / (1 + query.permutations) as f64;

    Ok(CiResult {
        statistic,
        p_value,
        samples_used: m,
        degenerate_nodes: Vec::new(),
        degenerate: false,
    })
}

/// Complement nodes whose fixed part under `event` reaches the
/// [`CONSTANT_DOMINANT_LEVEL`] quantile of every random term feeding them.
/// Bounded factors are capped by their event bound (an almost-sure cap);
/// unbounded factors by their innovation quantile.
pub fn constant_dominant_nodes(
    net: &MaxLinearNetwork,
    event: &ConditioningEvent,
) -> Result<Vec<usize>, CiError> {
    let rep = conditional_representation(net, event)?;
    let bounds = factor_bounds(net.star(), event);
    let complement = rep.complement();

    let caps: Vec<f64> = complement
        .iter()
        .map(|&j| match bounds[j] {
            Some(b) => b,
            None => net.innovations()[j]
                .quantile(CONSTANT_DOMINANT_LEVEL)
                .unwrap_or(f64::INFINITY),
        })
        .collect();

    let mut flagged = Vec::new();
    for (row, &i) in complement.iter().enumerate() {
        let random_reach = (0..complement.len())
            .filter(|&col| rep.inner().get(row, col) > 0.0)
            .map(|col| rep.inner().get(row, col) * caps[col])
            .fold(0.0f64, f64::max);
        if rep.offset()[row] >= random_reach {
            flagged.push(i);
        }
    }
    Ok(flagged)
}

// ---------------------------------------------------------------------------
// Distance-correlation machinery
// ---------------------------------------------------------------------------

/// Euclidean distance between two rows of a column-major rank block.
#[inline]
fn row_distance(cols: &[Vec<f64>], a: usize, b: usize) -> f64 {
    let mut s = 0.0;
    for col in cols {
        let diff = col[a] - col[b];
        s += diff * diff;
    }
    s.sqrt()
}

/// Doubly centered pairwise-distance matrix of one block, stored flat.
/// Row sums of the centered matrix vanish, which lets the permuted
/// covariance skip centering the other block entirely.
struct CenteredDistances {
    m: usize,
    centered: Vec<f64>,
}

impl CenteredDistances {
    fn build(cols: &[Vec<f64>], m: usize) -> Self {
        let mut dist = vec![0.0f64; m * m];
        for a in 0..m {
            for b in (a + 1)..m {
                let v = row_distance(cols, a, b);
                dist[a * m + b] = v;
                dist[b * m + a] = v;
            }
        }
        let row_means: Vec<f64> = (0..m)
            .map(|a| dist[a * m..(a + 1) * m].iter().sum::<f64>() / m as f64)
            .collect();
        let grand = row_means.iter().sum::<f64>() / m as f64;
        for a in 0..m {
            for b in 0..m {
                dist[a * m + b] += grand - row_means[a] - row_means[b];
            }
        }
        CenteredDistances { m, centered: dist }
    }

    /// `(1/m^2) sum A_c^2` — the distance variance of this block.
    fn variance(&self) -> f64 {
        let m2 = (self.m * self.m) as f64;
        self.centered.iter().map(|&v| v * v).sum::<f64>() / m2
    }

    /// `(1/m^2) sum_{a,b} A_c[a,b] * dist(other[perm a], other[perm b])`.
    ///
    /// Because every row of `A_c` sums to zero, subtracting the other
    /// block's centering terms changes nothing; the raw permuted distance
    /// is enough, and the other block's distance matrix never needs to be
    /// materialized.
    fn covariance_with(&self, other: &[Vec<f64>], perm: &[usize]) -> f64 {
        let m = self.m;
        // Gather the permuted rank columns once so the inner loop reads
        // small sequential vectors.
        let permuted: Vec<Vec<f64>> = other
            .iter()
            .map(|col| perm.iter().map(|&idx| col[idx]).collect())
            .collect();
        let mut total = 0.0f64;
        if permuted.len() == 1 {
            let col = &permuted[0];
            for a in 0..m {
                let base = &self.centered[a * m..(a + 1) * m];
                let ca = col[a];
                let mut row_sum = 0.0f64;
                for b in 0..m {
                    row_sum += base[b] * (ca - col[b]).abs();
                }
                total += row_sum;
            }
        } else {
            for a in 0..m {
                let base = &self.centered[a * m..(a + 1) * m];
                let mut row_sum = 0.0f64;
                for b in 0..m {
                    row_sum += base[b] * row_distance(&permuted, a, b);
                }
                total += row_sum;
            }
        }
        total / (m * m) as f64
    }
}

/// Distance variance of a block that is never materialized as a centered
/// matrix (two passes: row means, then centered squares).
fn distance_variance(cols: &[Vec<f64>], m: usize) -> f64 {
    let mut row_sums = vec![0.0f64; m];
    for a in 0..m {
        for b in (a + 1)..m {
            let v = row_distance(cols, a, b);
            row_sums[a] += v;
            row_sums[b] += v;
        }
    }
    let row_means: Vec<f64> = row_sums.iter().map(|s| s / m as f64).collect();
    let grand = row_means.iter().sum::<f64>() / m as f64;
    let mut total = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            let centered = if a == b { 0.0 } else { row_distance(cols, a, b) }
                - row_means[a]
                - row_means[b]
                + grand;
            total += centered * centered;
        }
    }
    total / (m * m) as f64
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
