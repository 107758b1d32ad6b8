//! Edge scores for structure recovery from observations.
//!
//! Two scorers share one output shape: a concentration scorer that looks
//! for the atom of `D = log X_child - log X_parent` at its minimum (the
//! signature of a multiplicative lower bound along true ancestry), and a
//! plain Pearson-correlation baseline.

use serde::{Deserialize, Serialize};

use crate::simulate::ObservationSet;
use crate::stats::{pearson, population_variance, quantile_sorted};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("observation set has no rows")]
    EmptyObservations,

    #[error(
        "nonpositive value {value} at row {row}, node {col}: log-domain scoring \
         needs strictly positive observations (review any log transform or \
         filter out base-flow rows)"
    )]
    NonPositiveValue { row: usize, col: usize, value: f64 },

    #[error("lower fraction r must lie in (0, 1], got {r}")]
    BadFraction { r: f64 },

    #[error("coefficient quantile must lie in [0, 1), got {q}")]
    BadCoeffQuantile { q: f64 },

    #[error("extreme filter quantile must lie in [0, 1), got {q}")]
    BadFilterQuantile { q: f64 },

    #[error("extreme filter kept no rows")]
    FilterKeptNothing,
}

// ---------------------------------------------------------------------------
// Score matrix
// ---------------------------------------------------------------------------

/// Scores for the hypothesis "column j is the parent of row i".
///
/// Entries are `None` when unusable (insufficient overlap, degenerate
/// input); no NaN is ever stored. `coeff(i, j)` carries the estimated edge
/// coefficient when the scorer provides one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    d: usize,
    scores: Vec<Option<f64>>,
    support: Vec<usize>,
    coeff: Vec<Option<f64>>,
}

impl ScoreMatrix {
    fn new(d: usize) -> Self {
        ScoreMatrix {
            d,
            scores: vec![None; d * d],
            support: vec![0; d * d],
            coeff: vec![None; d * d],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Score for "j is the parent of i", if usable.
    pub fn score(&self, i: usize, j: usize) -> Option<f64> {
        self.scores[i * self.d + j]
    }

    /// Overlapping non-missing sample count behind entry (i, j).
    pub fn support(&self, i: usize, j: usize) -> usize {
        self.support[i * self.d + j]
    }

    /// Estimated coefficient for the edge j -> i, if the scorer provides one.
    pub fn coeff(&self, i: usize, j: usize) -> Option<f64> {
        self.coeff[i * self.d + j]
    }

    fn set(&mut self, i: usize, j: usize, score: Option<f64>, support: usize, coeff: Option<f64>) {
        let idx = i * self.d + j;
        self.scores[idx] = score;
        self.support[idx] = support;
        self.coeff[idx] = coeff;
    }

    /// Builds a matrix directly from per-entry scores (tests, adapters).
    pub fn from_entries(d: usize, entries: Vec<Option<f64>>) -> Self {
        assert_eq!(entries.len(), d * d, "entry buffer shape mismatch");
        let support = entries.iter().map(|e| usize::from(e.is_some())).collect();
        ScoreMatrix {
            d,
            scores: entries,
            support,
            coeff: vec![None; d * d],
        }
    }
}

// ---------------------------------------------------------------------------
// Concentration (QTree-style) scorer
// ---------------------------------------------------------------------------

/// Parameters of the concentration scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QtreeParams {
    /// Fraction of the smallest log-ratios whose variance is scored.
    pub r: f64,
    /// Minimum pairwise overlap below which an entry is unusable.
    pub min_support: usize,
    /// Quantile of the log-ratios used for the coefficient estimate
    /// (0 means the minimum; a small positive value is robust to noise).
    pub coeff_quantile: f64,
    /// When set, keep only rows whose maximum present value reaches this
    /// quantile of all row maxima (focus on extreme episodes).
    pub extreme_filter_quantile: Option<f64>,
}

impl Default for QtreeParams {
    fn default() -> Self {
        QtreeParams {
            r: 0.2,
            min_support: 20,
            coeff_quantile: 0.05,
            extreme_filter_quantile: None,
        }
    }
}

/// Relative width of the band above the minimum log-ratio counted as "at
/// the minimum" when measuring the atom mass.
const ATOM_BAND: f64 = 1e-6;

/// Weight of the atom-mass tie-break relative to the variance term. Small
/// enough to be inert whenever variances differ materially; decisive when
/// several candidate parents all reach exactly zero variance.
const MASS_TIEBREAK: f64 = 1e-9;

/// Scores every ordered pair (child i, parent j) by how concentrated the
/// lower tail of `D = log X_i - log X_j` is: a true ancestor induces a
/// hard lower bound with an atom at it, so the variance of the smallest
/// `ceil(r * m)` values is near zero. Returns `-variance` plus a tiny
/// atom-mass tie-break (direct parents carry strictly more atom mass than
/// deeper ancestors on noise-free data), and the coefficient estimate
/// `exp(quantile of D)`.
pub fn qtree_scores(obs: &ObservationSet, params: &QtreeParams) -> Result<ScoreMatrix, ScoreError> {
    if obs.n_rows() == 0 {
        return Err(ScoreError::EmptyObservations);
    }
    if !(params.r > 0.0 && params.r <= 1.0) {
        return Err(ScoreError::BadFraction { r: params.r });
    }
    if !(0.0..1.0).contains(&params.coeff_quantile) {
        return Err(ScoreError::BadCoeffQuantile {
            q: params.coeff_quantile,
        });
    }
    let rows = select_rows(obs, params.extreme_filter_quantile)?;
    let d = obs.n_cols();

    // Cache logs once; missing or filtered entries stay unset.
    let logs = collect_logs(obs, &rows)?;

    let mut out = ScoreMatrix::new(d);
    let mut diffs: Vec<f64> = Vec::with_capacity(rows.len());
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            diffs.clear();
            for (t, _) in rows.iter().enumerate() {
                if let (Some(li), Some(lj)) = (logs[t * d + i], logs[t * d + j]) {
                    diffs.push(li - lj);
                }
            }
            let m = diffs.len();
            if m < params.min_support.max(1) {
                out.set(i, j, None, m, None);
                continue;
            }
            let lower_len = (params.r * m as f64).ceil() as usize;
            if lower_len < 2 {
                out.set(i, j, None, m, None);
                continue;
            }
            diffs.sort_by(|a, b| a.partial_cmp(b).expect("logs are finite"));
            let variance = population_variance(&diffs[..lower_len]);
            let min = diffs[0];
            let band = min + ATOM_BAND * min.abs().max(1.0);
            let at_minimum = diffs.iter().take_while(|&&v| v <= band).count();
            let mass = at_minimum as f64 / m as f64;
            let score = -variance + MASS_TIEBREAK * mass;
            let coeff = quantile_sorted(&diffs, params.coeff_quantile).exp();
            out.set(i, j, Some(score), m, Some(coeff));
        }
    }
    Ok(out)
}

/// Indices of rows to score, after the optional extreme filter.
fn select_rows(
    obs: &ObservationSet,
    filter_quantile: Option<f64>,
) -> Result<Vec<usize>, ScoreError> {
    let all: Vec<usize> = (0..obs.n_rows()).collect();
    let Some(q) = filter_quantile else {
        return Ok(all);
    };
    if !(0.0..1.0).contains(&q) {
        return Err(ScoreError::BadFilterQuantile { q });
    }
    let mut maxima: Vec<f64> = all.iter().filter_map(|&t| obs.row_max(t)).collect();
    if maxima.is_empty() {
        return Err(ScoreError::FilterKeptNothing);
    }
    maxima.sort_by(|a, b| a.partial_cmp(b).expect("present values are numbers"));
    let threshold = quantile_sorted(&maxima, q);
    let kept: Vec<usize> = all
        .into_iter()
        .filter(|&t| obs.row_max(t).is_some_and(|m| m > threshold))
        .collect();
    if kept.is_empty() {
        return Err(ScoreError::FilterKeptNothing);
    }
    Ok(kept)
}

/// Logs of the present values over the selected rows, validating
/// positivity; respects data already stored in the log domain.
fn collect_logs(obs: &ObservationSet, rows: &[usize]) -> Result<Vec<Option<f64>>, ScoreError> {
    let d = obs.n_cols();
    let mut logs = vec![None; rows.len() * d];
    for (t, &row) in rows.iter().enumerate() {
        for i in 0..d {
            if let Some(v) = obs.value(row, i) {
                let entry = if obs.log_domain() {
                    v
                } else {
                    if v <= 0.0 {
                        return Err(ScoreError::NonPositiveValue {
                            row,
                            col: i,
                            value: v,
                        });
                    }
                    v.ln()
                };
                logs[t * d + i] = Some(entry);
            }
        }
    }
    Ok(logs)
}

// ---------------------------------------------------------------------------
// Correlation baseline
// ---------------------------------------------------------------------------

/// Minimum pairwise overlap for a usable correlation entry.
const CORRELATION_MIN_OVERLAP: usize = 3;

/// Symmetric Pearson-correlation scores over pairwise-complete samples:
/// the naive neighbor detector. Signed correlations are kept as-is.
pub fn correlation_scores(obs: &ObservationSet) -> Result<ScoreMatrix, ScoreError> {
    if obs.n_rows() == 0 {
        return Err(ScoreError::EmptyObservations);
    }
    let d = obs.n_cols();
    let mut out = ScoreMatrix::new(d);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..d {
        for j in 0..i {
            xs.clear();
            ys.clear();
            for t in 0..obs.n_rows() {
                if let (Some(a), Some(b)) = (obs.value(t, i), obs.value(t, j)) {
                    xs.push(a);
                    ys.push(b);
                }
            }
            let m = xs.len();
            let score = if m < CORRELATION_MIN_OVERLAP {
                None
            } else {
                // Degenerate (constant) overlap yields None, flagged
                // unusable rather than propagating NaN.
                pearson(&xs, &ys)
            };
            out.set(i, j, score, m, None);
            out.set(j, i, score, m, None);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
