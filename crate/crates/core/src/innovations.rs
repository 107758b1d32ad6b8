//! Innovation distributions for max-linear models.
//!
//! All innovations are supported on (0, inf). The continuous families
//! (Fréchet, log-uniform) expose closed-form CDF, density, and quantile
//! functions; sampling is inverse-CDF throughout, so unconditional draws
//! and truncated draws share one code path and one uniform per draw.
//! The point-mass mixture exists for exact-arithmetic tests; it is not
//! continuous and is rejected by samplers that need invertible CDFs.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rng::open_unit;

/// Errors from innovation validation and use.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InnovationError {
    #[error("Frechet shape must be finite and > 0, got {shape}")]
    BadShape { shape: f64 },

    #[error("Frechet scale must be finite and > 0, got {scale}")]
    BadScale { scale: f64 },

    #[error("log-uniform bounds must satisfy 0 < lo <= hi, got [{lo}, {hi}]")]
    BadLogUniformBounds { lo: f64, hi: f64 },

    #[error("point-mass atoms must be finite, positive, strictly increasing, with positive weights summing to 1")]
    BadAtoms,

    #[error("operation requires a continuous innovation with an invertible CDF, got {kind}")]
    NotContinuous { kind: String },

    #[error("quantile level must lie in (0, 1), got {u}")]
    BadQuantileLevel { u: f64 },
}

/// One innovation distribution on (0, inf).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", content = "params", rename_all = "snake_case")]
pub enum Innovation {
    /// Fréchet with CDF `exp(-(scale/z)^shape)` on z > 0.
    Frechet { shape: f64, scale: f64 },
    /// Log-uniform on [lo, hi]: `log Z` uniform on `[log lo, log hi]`.
    LogUniform { lo: f64, hi: f64 },
    /// Finite mixture of point masses (test machinery; not continuous).
    PointMasses { atoms: Vec<PointMass> },
}

/// One atom of a point-mass mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    pub value: f64,
    pub weight: f64,
}

impl Innovation {
    /// Unit Fréchet: shape 1, scale 1.
    pub fn unit_frechet() -> Self {
        Innovation::Frechet { shape: 1.0, scale: 1.0 }
    }

    /// Validates the parameters of this specification.
    pub fn validate(&self) -> Result<(), InnovationError> {
        match self {
            Innovation::Frechet { shape, scale } => {
                if !(shape.is_finite() && *shape > 0.0) {
                    return Err(InnovationError::BadShape { shape: *shape });
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(InnovationError::BadScale { scale: *scale });
                }
                Ok(())
            }
            Innovation::LogUniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo > 0.0 && lo <= hi) {
                    return Err(InnovationError::BadLogUniformBounds { lo: *lo, hi: *hi });
                }
                Ok(())
            }
            Innovation::PointMasses { atoms } => {
                if atoms.is_empty() {
                    return Err(InnovationError::BadAtoms);
                }
                let mut total = 0.0;
                let mut prev = 0.0;
                for a in atoms {
                    if !(a.value.is_finite() && a.value > prev && a.weight > 0.0) {
                        return Err(InnovationError::BadAtoms);
                    }
                    prev = a.value;
                    total += a.weight;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(InnovationError::BadAtoms);
                }
                Ok(())
            }
        }
    }

    /// Whether the CDF is continuous and strictly increasing on the support.
    pub fn is_continuous(&self) -> bool {
        !matches!(self, Innovation::PointMasses { .. })
    }

    /// Short human name, used in errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Innovation::Frechet { .. } => "frechet",
            Innovation::LogUniform { .. } => "log_uniform",
            Innovation::PointMasses { .. } => "point_masses",
        }
    }

    /// CDF `P(Z <= z)`; 0 for z <= 0.
    pub fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        match self {
            Innovation::Frechet { shape, scale } => (-(scale / z).powf(*shape)).exp(),
            Innovation::LogUniform { lo, hi } => {
                if z <= *lo {
                    0.0
                } else if z >= *hi {
                    1.0
                } else if lo == hi {
                    1.0
                } else {
                    (z / lo).ln() / (hi / lo).ln()
                }
            }
            Innovation::PointMasses { atoms } => atoms
                .iter()
                .filter(|a| a.value <= z)
                .map(|a| a.weight)
                .sum(),
        }
    }

    /// Lebesgue density for continuous innovations; for point masses this
    /// is the weight at exactly `z` (zero elsewhere), which is the correct
    /// factor for hit-weight computations with discrete innovations.
    pub fn density(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        match self {
            Innovation::Frechet { shape, scale } => {
                let ratio_pow = (scale / z).powf(*shape);
                (shape / z) * ratio_pow * (-ratio_pow).exp()
            }
            Innovation::LogUniform { lo, hi } => {
                if z < *lo || z > *hi || lo == hi {
                    0.0
                } else {
                    1.0 / (z * (hi / lo).ln())
                }
            }
            Innovation::PointMasses { atoms } => atoms
                .iter()
                .find(|a| a.value == z)
                .map_or(0.0, |a| a.weight),
        }
    }

    /// Natural log of [`Innovation::density`]; `-inf` where the density is 0.
    pub fn log_density(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match self {
            Innovation::Frechet { shape, scale } => {
                let ratio_pow = (scale / z).powf(*shape);
                shape.ln() - z.ln() + ratio_pow.ln() - ratio_pow
            }
            _ => {
                let d = self.density(z);
                if d > 0.0 {
                    d.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Quantile function for continuous innovations, `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64, InnovationError> {
        if !(u > 0.0 && u < 1.0) {
            return Err(InnovationError::BadQuantileLevel { u });
        }
        match self {
            Innovation::Frechet { shape, scale } => Ok(scale * (-u.ln()).powf(-1.0 / shape)),
            Innovation::LogUniform { lo, hi } => Ok(lo * (hi / lo).powf(u)),
            Innovation::PointMasses { .. } => Err(InnovationError::NotContinuous {
                kind: self.kind().to_string(),
            }),
        }
    }

    /// One unconditional draw (inverse CDF on an open-interval uniform).
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Innovation::PointMasses { atoms } => {
                let u = open_unit(rng);
                let mut acc = 0.0;
                for a in atoms {
                    acc += a.weight;
                    if u <= acc {
                        return a.value;
                    }
                }
                atoms.last().expect("validated non-empty").value
            }
            _ => self
                .quantile(open_unit(rng))
                .expect("continuous innovation has a quantile"),
        }
    }

    /// One draw conditioned on `Z <= bound` (inverse CDF of the truncated
    /// law). Requires a continuous innovation and `cdf(bound) > 0`.
    pub fn sample_truncated(
        &self,
        bound: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<f64, InnovationError> {
        if !self.is_continuous() {
            return Err(InnovationError::NotContinuous {
                kind: self.kind().to_string(),
            });
        }
        let mass = self.cdf(bound);
        if mass <= 0.0 {
            return Err(InnovationError::BadQuantileLevel { u: mass });
        }
        let u = open_unit(rng) * mass;
        // Clamp away from the endpoints for numerical safety; the draw is
        // then guaranteed to lie in (0, bound].
        let z = self.quantile(u.min(1.0 - f64::EPSILON))?;
        Ok(z.min(bound))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, stream_rng};
    use crate::tolerance::rel_close;

    #[test]
    fn unit_frechet_cdf_matches_closed_form() {
        let f = Innovation::unit_frechet();
        assert!(rel_close(f.cdf(1.0), (-1.0f64).exp(), 1e-12));
        assert!(rel_close(f.cdf(2.0), (-0.5f64).exp(), 1e-12));
        assert_eq!(f.cdf(0.0), 0.0);
        assert_eq!(f.cdf(-3.0), 0.0);
    }

    #[test]
    fn frechet_quantile_inverts_cdf() {
        let f = Innovation::Frechet { shape: 2.5, scale: 0.7 };
        for &u in &[1e-6, 0.1, 0.5, 0.9, 1.0 - 1e-9] {
            let z = f.quantile(u).unwrap();
            assert!(rel_close(f.cdf(z), u, 1e-9), "u={u}");
        }
    }

    #[test]
    fn frechet_density_integrates_cdf_increment() {
        // Central difference of the CDF approximates the density.
        let f = Innovation::Frechet { shape: 1.5, scale: 2.0 };
        for &z in &[0.5, 1.0, 2.0, 5.0] {
            let h = 1e-6;
            let numeric = (f.cdf(z + h) - f.cdf(z - h)) / (2.0 * h);
            assert!(rel_close(numeric, f.density(z), 1e-4), "z={z}");
        }
    }

    #[test]
    fn frechet_log_density_matches_density() {
        let f = Innovation::Frechet { shape: 1.5, scale: 2.0 };
        for &z in &[0.3, 1.0, 4.0] {
            assert!(rel_close(f.log_density(z), f.density(z).ln(), 1e-12));
        }
    }

    #[test]
    fn log_uniform_cdf_density_quantile_are_consistent() {
        let f = Innovation::LogUniform { lo: 0.5, hi: 8.0 };
        assert_eq!(f.cdf(0.4), 0.0);
        assert_eq!(f.cdf(9.0), 1.0);
        assert!(rel_close(f.cdf(2.0), (2.0f64 / 0.5).ln() / 16.0f64.ln(), 1e-12));
        for &u in &[0.05, 0.5, 0.95] {
            let z = f.quantile(u).unwrap();
            assert!(rel_close(f.cdf(z), u, 1e-12));
        }
        let h = 1e-7;
        let numeric = (f.cdf(2.0 + h) - f.cdf(2.0 - h)) / (2.0 * h);
        assert!(rel_close(numeric, f.density(2.0), 1e-5));
    }

    #[test]
    fn point_masses_cdf_steps_and_density_is_weight() {
        let f = Innovation::PointMasses {
            atoms: vec![
                PointMass { value: 1.0, weight: 0.25 },
                PointMass { value: 3.0, weight: 0.75 },
            ],
        };
        f.validate().unwrap();
        assert_eq!(f.cdf(0.5), 0.0);
        assert_eq!(f.cdf(1.0), 0.25);
        assert_eq!(f.cdf(2.9), 0.25);
        assert_eq!(f.cdf(3.0), 1.0);
        assert_eq!(f.density(3.0), 0.75);
        assert_eq!(f.density(2.0), 0.0);
        assert!(!f.is_continuous());
        assert!(matches!(
            f.quantile(0.5).unwrap_err(),
            InnovationError::NotContinuous { .. }
        ));
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(Innovation::Frechet { shape: 0.0, scale: 1.0 }.validate().is_err());
        assert!(Innovation::Frechet { shape: 1.0, scale: -1.0 }.validate().is_err());
        assert!(Innovation::LogUniform { lo: 0.0, hi: 1.0 }.validate().is_err());
        assert!(Innovation::LogUniform { lo: 2.0, hi: 1.0 }.validate().is_err());
        assert!(Innovation::PointMasses { atoms: vec![] }.validate().is_err());
        assert!(Innovation::PointMasses {
            atoms: vec![PointMass { value: 1.0, weight: 0.5 }]
        }
        .validate()
        .is_err());
    }

    #[test]
    fn unconditional_sampling_tracks_the_cdf() {
        let f = Innovation::unit_frechet();
        let mut rng = stream_rng(5, stream::AUX, 1);
        let n = 100_000;
        let below_one = (0..n).filter(|_| f.sample(&mut rng) <= 1.0).count();
        let expect = (-1.0f64).exp();
        let got = below_one as f64 / n as f64;
        // 3 standard errors of a Bernoulli(e^-1) frequency at n = 1e5.
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((got - expect).abs() <= 3.0 * se, "got {got}, want {expect}");
    }

    #[test]
    fn truncated_sampling_respects_the_bound_exactly() {
        let f = Innovation::Frechet { shape: 1.2, scale: 1.0 };
        let mut rng = stream_rng(6, stream::AUX, 2);
        for _ in 0..10_000 {
            let z = f.sample_truncated(2.5, &mut rng).unwrap();
            assert!(z > 0.0 && z <= 2.5);
        }
    }

    #[test]
    fn truncated_sampling_matches_conditional_law() {
        // Empirical CDF of truncated draws at the midpoint must match
        // F(z)/F(bound).
        let f = Innovation::unit_frechet();
        let bound = 2.0;
        let probe = 1.0;
        let mut rng = stream_rng(7, stream::AUX, 3);
        let n = 50_000;
        let hits = (0..n)
            .filter(|_| f.sample_truncated(bound, &mut rng).unwrap() <= probe)
            .count();
        let expect = f.cdf(probe) / f.cdf(bound);
        let got = hits as f64 / n as f64;
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((got - expect).abs() <= 4.0 * se, "got {got}, want {expect}");
    }

    #[test]
    fn serde_round_trips_the_tagged_layout() {
        let f = Innovation::Frechet { shape: 1.0, scale: 1.0 };
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"dist":"frechet","params":{"shape":1.0,"scale":1.0}}"#);
        let back: Innovation = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        let lu = Innovation::LogUniform { lo: 0.5, hi: 2.0 };
        let back: Innovation = serde_json::from_str(&serde_json::to_string(&lu).unwrap()).unwrap();
        assert_eq!(back, lu);
    }
}
