//! Enumeration of hitting scenarios for exact conditional sampling.
//!
//! Conditioning a max-linear factor model `X = C (x) Z` on `X_K = x_K`
//! splits the conditional law into finitely many scenarios: each
//! conditioned coordinate is attained ("hit") by exactly one factor, which
//! pins that factor to a forced value; all other factors stay free below
//! per-factor bounds. The conditional distribution is the mixture of these
//! scenarios with weights proportional to their likelihood contribution.

use serde::{Deserialize, Serialize};

use crate::innovations::Innovation;
use crate::stats::log_sum_exp;
use crate::tropical::TropicalMatrix;

/// Hard cap on the scenario-enumeration candidate product.
pub const MAX_SCENARIO_CANDIDATES: f64 = 1e6;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("conditioning event has no coordinates")]
    EmptyEvent,

    #[error("conditioned node {node} is out of range for {d} coordinates")]
    NodeOutOfRange { node: usize, d: usize },

    #[error("node {node} is conditioned twice")]
    DuplicateNode { node: usize },

    #[error("conditioned value for node {node} must be positive and finite, got {value}")]
    BadValue { node: usize, value: f64 },

    #[error(
        "event is infeasible: no factor can attain coordinate {node} at {value} \
         without pushing another conditioned coordinate above its value"
    )]
    Infeasible { node: usize, value: f64 },

    #[error(
        "scenario enumeration would visit about {estimate:.3e} hit maps, \
         above the supported limit of {limit:.0e}"
    )]
    TooManyScenarios { estimate: f64, limit: f64 },

    #[error(
        "every feasible scenario has zero probability under the innovation \
         distributions; the event is not attainable in law"
    )]
    ZeroProbabilityEvent,

    #[error("factor count {got} does not match coefficient columns {expected}")]
    InnovationCount { expected: usize, got: usize },
}

// ---------------------------------------------------------------------------
// Event
// ---------------------------------------------------------------------------

/// The event `X_K = x_K`: distinct coordinates with positive values,
/// stored sorted by node index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningEvent {
    nodes: Vec<usize>,
    values: Vec<f64>,
}

impl ConditioningEvent {
    /// Builds and validates an event from (node, value) pairs; `d` is the
    /// coordinate count of the model the event will apply to. An empty
    /// event is allowed here (the unconditional case for representation
    /// extraction); scenario enumeration rejects it.
    pub fn new(pairs: &[(usize, f64)], d: usize) -> Result<Self, ScenarioError> {
        let mut sorted: Vec<(usize, f64)> = pairs.to_vec();
        sorted.sort_by_key(|&(node, _)| node);
        for window in sorted.windows(2) {
            if window[0].0 == window[1].0 {
                return Err(ScenarioError::DuplicateNode { node: window[0].0 });
            }
        }
        for &(node, value) in &sorted {
            if node >= d {
                return Err(ScenarioError::NodeOutOfRange { node, d });
            }
            if !(value.is_finite() && value > 0.0) {
                return Err(ScenarioError::BadValue { node, value });
            }
        }
        Ok(ConditioningEvent {
            nodes: sorted.iter().map(|&(n, _)| n).collect(),
            values: sorted.iter().map(|&(_, v)| v).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Conditioned node indices, ascending.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Values aligned with [`Self::nodes`].
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The conditioned value of `node`, if conditioned.
    pub fn value_of(&self, node: usize) -> Option<f64> {
        self.nodes
            .binary_search(&node)
            .ok()
            .map(|idx| self.values[idx])
    }

    /// Complement coordinates (not conditioned), ascending.
    pub fn complement(&self, d: usize) -> Vec<usize> {
        (0..d).filter(|i| !self.nodes.contains(i)).collect()
    }
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

/// One hitting scenario: which factor attains each conditioned coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingScenario {
    /// `hits[idx]` is the factor attaining `event.nodes()[idx]`.
    pub hits: Vec<usize>,
    /// Forced factors with their pinned values, ascending by factor.
    pub forced: Vec<(usize, f64)>,
    /// Unnormalized log weight of this scenario.
    pub log_weight: f64,
}

impl HittingScenario {
    /// The forced value of `factor`, if this scenario forces it.
    pub fn forced_value(&self, factor: usize) -> Option<f64> {
        self.forced
            .iter()
            .find(|&&(j, _)| j == factor)
            .map(|&(_, v)| v)
    }
}

/// The complete enumerated conditional structure for one event.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    event: ConditioningEvent,
    d: usize,
    p: usize,
    /// Per-factor upper bound `b_j = min_k x_k / C_kj`; `None` when the
    /// factor feeds no conditioned coordinate (unconstrained).
    bounds: Vec<Option<f64>>,
    scenarios: Vec<HittingScenario>,
    /// Normalized scenario probabilities (sum to 1).
    weights: Vec<f64>,
}

impl ScenarioSet {
    pub fn event(&self) -> &ConditioningEvent {
        &self.event
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn factor_count(&self) -> usize {
        self.p
    }

    pub fn bound(&self, factor: usize) -> Option<f64> {
        self.bounds[factor]
    }

    pub fn scenarios(&self) -> &[HittingScenario] {
        &self.scenarios
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Complement coordinates, ascending.
    pub fn complement(&self) -> Vec<usize> {
        self.event.complement(self.d)
    }
}

/// Enumerates every feasible hitting scenario of `event` under the factor
/// matrix `coeff` (d x p) with the given per-factor innovations.
///
/// A factor `j` can hit coordinate `k` only at the forced value
/// `x_k / C_kj`, and only if that value does not push another conditioned
/// coordinate above its target — equivalently, the quotient equals the
/// factor bound `b_j`. Feasible hit maps are exactly the products of the
/// per-coordinate candidate sets; each scenario's weight is
///
/// ```text
/// prod_{j forced} density_j(z_j) * prod_{k in K} 1 / C_{k, hit(k)}
///   * prod_{j free, bounded} CDF_j(b_j)
/// ```
///
/// accumulated in the log domain. The `1 / C` factors are the Jacobian of
/// the map from the forced factor value to the observed coordinate; they
/// make the mixture weights the density decomposition of the event and are
/// validated against the rejection oracle.
pub fn enumerate_scenarios(
    coeff: &TropicalMatrix,
    event: &ConditioningEvent,
    innovations: &[Innovation],
) -> Result<ScenarioSet, ScenarioError> {
    let d = coeff.rows();
    let p = coeff.cols();
    if event.is_empty() {
        return Err(ScenarioError::EmptyEvent);
    }
    if innovations.len() != p {
        return Err(ScenarioError::InnovationCount {
            expected: p,
            got: innovations.len(),
        });
    }
    if let Some(&node) = event.nodes().iter().find(|&&n| n >= d) {
        return Err(ScenarioError::NodeOutOfRange { node, d });
    }

    let bounds = factor_bounds(coeff, event);

    // Candidate factors per conditioned coordinate: those whose bound is
    // attained exactly at this coordinate.
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(event.len());
    for (idx, &k) in event.nodes().iter().enumerate() {
        let x_k = event.values()[idx];
        let mut cand = Vec::new();
        for j in 0..p {
            let c = coeff.get(k, j);
            if c > 0.0 && Some(x_k / c) == bounds[j] {
                cand.push(j);
            }
        }
        if cand.is_empty() {
            return Err(ScenarioError::Infeasible { node: k, value: x_k });
        }
        candidates.push(cand);
    }

    let estimate: f64 = candidates.iter().map(|c| c.len() as f64).product();
    if estimate > MAX_SCENARIO_CANDIDATES {
        return Err(ScenarioError::TooManyScenarios {
            estimate,
            limit: MAX_SCENARIO_CANDIDATES,
        });
    }

    // Cartesian product in lexicographic order of candidate positions.
    let mut scenarios = Vec::new();
    let mut cursor = vec![0usize; event.len()];
    loop {
        let hits: Vec<usize> = cursor
            .iter()
            .enumerate()
            .map(|(row, &c)| candidates[row][c])
            .collect();
        scenarios.push(build_scenario(coeff, event, innovations, &bounds, &hits));

        // Advance the mixed-radix cursor.
        let mut level = event.len();
        loop {
            if level == 0 {
                break;
            }
            level -= 1;
            cursor[level] += 1;
            if cursor[level] < candidates[level].len() {
                break;
            }
            cursor[level] = 0;
            if level == 0 {
                level = usize::MAX;
                break;
            }
        }
        if level == usize::MAX {
            break;
        }
    }

    let log_weights: Vec<f64> = scenarios.iter().map(|s| s.log_weight).collect();
    let total = log_sum_exp(&log_weights);
    if total == f64::NEG_INFINITY {
        return Err(ScenarioError::ZeroProbabilityEvent);
    }
    let weights: Vec<f64> = log_weights.iter().map(|&lw| (lw - total).exp()).collect();

    Ok(ScenarioSet {
        event: event.clone(),
        d,
        p,
        bounds,
        scenarios,
        weights,
    })
}

/// Per-factor upper bounds inside the event: `b_j = min_k x_k / C_kj`
/// over conditioned rows `k` seeing factor `j`; `None` when no conditioned
/// row does. Raw divisions, so candidate membership elsewhere is an exact
/// equality of identically computed quotients.
pub fn factor_bounds(coeff: &TropicalMatrix, event: &ConditioningEvent) -> Vec<Option<f64>> {
    let p = coeff.cols();
    let mut bounds: Vec<Option<f64>> = vec![None; p];
    for (idx, &k) in event.nodes().iter().enumerate() {
        let x_k = event.values()[idx];
        for j in 0..p {
            let c = coeff.get(k, j);
            if c > 0.0 {
                let ratio = x_k / c;
                bounds[j] = Some(match bounds[j] {
                    Some(b) => b.min(ratio),
                    None => ratio,
                });
            }
        }
    }
    bounds
}

/// Assembles one scenario from its hit map.
fn build_scenario(
    coeff: &TropicalMatrix,
    event: &ConditioningEvent,
    innovations: &[Innovation],
    bounds: &[Option<f64>],
    hits: &[usize],
) -> HittingScenario {
    let mut forced: Vec<(usize, f64)> = Vec::new();
    let mut log_weight = 0.0;
    for (idx, &j) in hits.iter().enumerate() {
        let k = event.nodes()[idx];
        // The forced value always equals the factor bound (that is what
        // made the factor a candidate).
        let value = bounds[j].expect("hitting factor has a bound");
        if !forced.iter().any(|&(f, _)| f == j) {
            forced.push((j, value));
        }
        // Jacobian of x_k = C_kj * z_j with respect to z_j.
        log_weight -= coeff.get(k, j).ln();
    }
    forced.sort_by_key(|&(j, _)| j);
    for &(j, value) in &forced {
        log_weight += innovations[j].log_density(value);
    }
    for (j, bound) in bounds.iter().enumerate() {
        if forced.iter().any(|&(f, _)| f == j) {
            continue;
        }
        if let Some(b) = bound {
            log_weight += innovations[j].cdf(*b).ln();
        }
    }
    HittingScenario {
        hits: hits.to_vec(),
        forced,
        log_weight,
    }
}

// ---------------------------------------------------------------------------
// Support cells
// ---------------------------------------------------------------------------

/// A free factor inside one support cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeFactor {
    pub factor: usize,
    /// Upper bound on the factor inside the event; `None` = unconstrained.
    pub bound: Option<f64>,
}

/// The conditional support piece of one scenario: on this cell,
/// `X_i = max(fixed_i, max over free j of C_ij * Z_j)` for complement
/// coordinates `i`, with each free `Z_j` confined below its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCell {
    /// Complement coordinates, ascending (shared across cells).
    pub coordinates: Vec<usize>,
    /// Fixed part per complement coordinate from the forced factors.
    pub fixed: Vec<f64>,
    /// Factors left free in this scenario.
    pub free: Vec<FreeFactor>,
}

/// Describes the conditional support, one cell per scenario.
pub fn support_cells(coeff: &TropicalMatrix, set: &ScenarioSet) -> Vec<SupportCell> {
    let coordinates = set.complement();
    set.scenarios()
        .iter()
        .map(|scenario| {
            let fixed: Vec<f64> = coordinates
                .iter()
                .map(|&i| {
                    scenario
                        .forced
                        .iter()
                        .map(|&(j, z)| coeff.get(i, j) * z)
                        .fold(0.0f64, f64::max)
                })
                .collect();
            let free: Vec<FreeFactor> = (0..set.factor_count())
                .filter(|&j| scenario.forced_value(j).is_none())
                .map(|j| FreeFactor {
                    factor: j,
                    bound: set.bound(j),
                })
                .collect();
            SupportCell {
                coordinates: coordinates.clone(),
                fixed,
                free,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
