//! Exact distributional quantities: the joint CDF of a max-linear model
//! with Fréchet factors, and the tail-dependence function with its
//! large-threshold approximation.

use crate::innovations::Innovation;
use crate::model::{FactorModel, MaxLinearNetwork};
use crate::tropical::TropicalMatrix;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LawError {
    #[error("closed-form CDF requires Frechet factors; factor {factor} is {kind}")]
    NonFrechetFactor { factor: usize, kind: &'static str },

    #[error("CDF query point must be strictly positive; coordinate {index} is {value}")]
    NonPositiveCoordinate { index: usize, value: f64 },

    #[error("query vector has {got} entries, model has {expected} coordinates")]
    LengthMismatch { expected: usize, got: usize },
}

// ---------------------------------------------------------------------------
// Joint CDF
// ---------------------------------------------------------------------------

/// Exact joint CDF of `X = C (x) Z` with independent Fréchet factors:
/// `P(X <= x) = prod_j P(Z_j <= m_j)` where `m_j = min over {i : C_ij > 0}
/// of x_i / C_ij` is the largest value factor `j` may take without pushing
/// any coordinate above `x`. Columns without support leave their factor
/// unconstrained and contribute 1.
pub fn cdf(coeff: &TropicalMatrix, innovations: &[Innovation], x: &[f64]) -> Result<f64, LawError> {
    let d = coeff.rows();
    let p = coeff.cols();
    if x.len() != d {
        return Err(LawError::LengthMismatch {
            expected: d,
            got: x.len(),
        });
    }
    for (index, &xi) in x.iter().enumerate() {
        if !(xi.is_finite() && xi > 0.0) {
            return Err(LawError::NonPositiveCoordinate { index, value: xi });
        }
    }
    for (factor, spec) in innovations.iter().enumerate() {
        if !matches!(spec, Innovation::Frechet { .. }) {
            return Err(LawError::NonFrechetFactor {
                factor,
                kind: spec.kind(),
            });
        }
    }
    debug_assert_eq!(innovations.len(), p);

    let mut prob = 1.0;
    for (j, spec) in innovations.iter().enumerate() {
        let mut bound = f64::INFINITY;
        for i in 0..d {
            let c = coeff.get(i, j);
            if c > 0.0 {
                let ratio = x[i] / c;
                if ratio < bound {
                    bound = ratio;
                }
            }
        }
        if bound.is_finite() {
            prob *= spec.cdf(bound);
        }
    }
    Ok(prob)
}

/// Joint CDF of a recursive network, `P(X <= x)` with `X = C* (x) Z`.
pub fn cdf_network(model: &MaxLinearNetwork, x: &[f64]) -> Result<f64, LawError> {
    cdf(model.star(), model.innovations(), x)
}

/// Joint CDF of a flat factor model.
pub fn cdf_factor(model: &FactorModel, x: &[f64]) -> Result<f64, LawError> {
    cdf(model.coeff(), model.innovations(), x)
}

// ---------------------------------------------------------------------------
// Tail dependence
// ---------------------------------------------------------------------------

/// Exact tail-dependence function of a max-linear model with standardized
/// margins: `l(y) = sum_j max_i C_ij * y_i`. Homogeneous of degree one.
pub fn tail_dependence(coeff: &TropicalMatrix, y: &[f64]) -> Result<f64, LawError> {
    let d = coeff.rows();
    let p = coeff.cols();
    if y.len() != d {
        return Err(LawError::LengthMismatch {
            expected: d,
            got: y.len(),
        });
    }
    let mut total = 0.0;
    for j in 0..p {
        let mut best = 0.0f64;
        for i in 0..d {
            let term = coeff.get(i, j) * y[i];
            if term > best {
                best = term;
            }
        }
        total += best;
    }
    Ok(total)
}

/// Large-threshold approximation: the double max `max_j max_i C_ij * y_i`.
/// Satisfies `approx <= l(y) <= p * approx`.
pub fn tail_dependence_approx(coeff: &TropicalMatrix, y: &[f64]) -> Result<f64, LawError> {
    let d = coeff.rows();
    let p = coeff.cols();
    if y.len() != d {
        return Err(LawError::LengthMismatch {
            expected: d,
            got: y.len(),
        });
    }
    let mut best = 0.0f64;
    for j in 0..p {
        for i in 0..d {
            let term = coeff.get(i, j) * y[i];
            if term > best {
                best = term;
            }
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
