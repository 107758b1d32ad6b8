//! Exact conditional sampling from max-linear factor models.
//!
//! Given `X = C (x) Z` and the event `X_K = x_K`, draws follow the
//! enumerated scenario mixture: pick a scenario by its weight, pin the
//! forced factors, draw each remaining factor from its innovation law
//! truncated to the scenario bound, then push through the factor matrix.
//! Conditioned coordinates are emitted exactly as conditioned.

use crate::innovations::{Innovation, InnovationError};
use crate::rng::{open_unit, stream, stream_rng};
use crate::scenarios::{enumerate_scenarios, ConditioningEvent, ScenarioError, ScenarioSet};
use crate::tropical::TropicalMatrix;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplerError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),

    #[error(transparent)]
    Innovation(#[from] InnovationError),

    #[error(
        "rejection oracle accepted {accepted} of {attempts} draws, fewer than \
         the {needed} requested; widen the band or raise the attempt budget"
    )]
    RejectionStarved {
        attempts: usize,
        accepted: usize,
        needed: usize,
    },
}

// ---------------------------------------------------------------------------
// Conditional draws
// ---------------------------------------------------------------------------

/// One draw from the conditional law.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDraw {
    /// Full observation vector; conditioned coordinates carry the event
    /// values bit-exactly.
    pub values: Vec<f64>,
    /// The factor vector behind the draw.
    pub factors: Vec<f64>,
    /// Index of the scenario the draw was taken from.
    pub scenario: usize,
}

/// Draws `m` samples from the conditional law of `X = coeff (x) Z` given
/// `event`. Enumerates the scenario mixture first; see [`sample_from_set`]
/// for the per-draw procedure.
pub fn sample_conditional(
    coeff: &TropicalMatrix,
    event: &ConditioningEvent,
    innovations: &[Innovation],
    m: usize,
    seed: u64,
) -> Result<Vec<ConditionalDraw>, SamplerError> {
    let set = enumerate_scenarios(coeff, event, innovations)?;
    sample_from_set(coeff, &set, innovations, m, seed)
}

/// Draws `m` samples from a pre-enumerated scenario mixture.
///
/// Draw `t` consumes its own substream (`seed`, draw stream, index `t`), so
/// any prefix of the output is independent of `m`: one uniform chooses the
/// scenario by cumulative weight, then the free factors are drawn by
/// truncated inverse CDF in ascending factor order.
pub fn sample_from_set(
    coeff: &TropicalMatrix,
    set: &ScenarioSet,
    innovations: &[Innovation],
    m: usize,
    seed: u64,
) -> Result<Vec<ConditionalDraw>, SamplerError> {
    let d = coeff.rows();
    let p = coeff.cols();
    let cumulative: Vec<f64> = set
        .weights()
        .iter()
        .scan(0.0, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect();

    let mut draws = Vec::with_capacity(m);
    for t in 0..m {
        let mut rng = stream_rng(seed, stream::DRAW, t as u64);
        let u = open_unit(&mut rng);
        let scenario_idx = cumulative
            .iter()
            .position(|&c| u <= c)
            .unwrap_or(set.scenarios().len() - 1);
        let scenario = &set.scenarios()[scenario_idx];

        let mut factors = Vec::with_capacity(p);
        for j in 0..p {
            let z = match scenario.forced_value(j) {
                Some(v) => v,
                None => match set.bound(j) {
                    Some(b) => innovations[j].sample_truncated(b, &mut rng)?,
                    None => innovations[j].sample(&mut rng),
                },
            };
            factors.push(z);
        }

        let mut values: Vec<f64> = (0..d)
            .map(|i| {
                (0..p)
                    .map(|j| coeff.get(i, j) * factors[j])
                    .fold(0.0f64, f64::max)
            })
            .collect();
        // Conditioned coordinates are pinned to the event values
        // bit-exactly; the computed maximum agrees up to rounding in the
        // single product C_kj * (x_k / C_kj).
        for (idx, &k) in set.event().nodes().iter().enumerate() {
            let x_k = set.event().values()[idx];
            debug_assert!(
                (values[k] - x_k).abs() <= 1e-12 * x_k,
                "scenario draw misses its own conditioned coordinate"
            );
            values[k] = x_k;
        }

        draws.push(ConditionalDraw {
            values,
            factors,
            scenario: scenario_idx,
        });
    }
    Ok(draws)
}

// ---------------------------------------------------------------------------
// Rejection oracle
// ---------------------------------------------------------------------------

/// Brute-force check model for the conditional sampler: draw the model
/// unconditionally and keep draws whose conditioned coordinates fall in a
/// relative `epsilon`-band around the event.
///
/// With a single conditioned coordinate, each accepted draw is rescaled
/// onto the exact fiber by the per-coordinate ratio
/// `x_k * (draw_i / draw_k)`; with several, accepted draws are returned
/// as-is (the band is the approximation). Returns full observation
/// vectors.
pub fn rejection_oracle(
    coeff: &TropicalMatrix,
    event: &ConditioningEvent,
    innovations: &[Innovation],
    needed: usize,
    max_attempts: usize,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>, SamplerError> {
    assert!(epsilon > 0.0, "rejection band must be positive");
    let d = coeff.rows();
    let p = coeff.cols();
    if let Some(&node) = event.nodes().iter().find(|&&n| n >= d) {
        return Err(ScenarioError::NodeOutOfRange { node, d }.into());
    }
    let rescale = event.len() == 1;

    let mut accepted = Vec::with_capacity(needed);
    for attempt in 0..max_attempts {
        if accepted.len() >= needed {
            break;
        }
        let mut rng = stream_rng(seed, stream::REJECTION, attempt as u64);
        let factors: Vec<f64> = (0..p).map(|j| innovations[j].sample(&mut rng)).collect();
        let draw: Vec<f64> = (0..d)
            .map(|i| {
                (0..p)
                    .map(|j| coeff.get(i, j) * factors[j])
                    .fold(0.0f64, f64::max)
            })
            .collect();
        let in_band = event
            .nodes()
            .iter()
            .zip(event.values())
            .all(|(&k, &x_k)| (draw[k] / x_k - 1.0).abs() <= epsilon);
        if !in_band {
            continue;
        }
        if rescale {
            let k = event.nodes()[0];
            let x_k = event.values()[0];
            let anchor = draw[k];
            accepted.push(draw.iter().map(|&v| x_k * (v / anchor)).collect());
        } else {
            accepted.push(draw);
        }
    }
    if accepted.len() < needed {
        return Err(SamplerError::RejectionStarved {
            attempts: max_attempts,
            accepted: accepted.len(),
            needed,
        });
    }
    Ok(accepted)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
