use rand::Rng;
use serde::{Deserialize, Serialize};

use super::WorkloadError;

/// Distribution of one job attribute. All values are in the unit of the
/// attribute they generate and must be strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    Deterministic { value: f64 },
    Exponential { rate: f64 },
    /// `hi` with probability `p_hi`, otherwise `lo`.
    TwoPoint { lo: f64, hi: f64, p_hi: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

const PROB_SUM_TOLERANCE: f64 = 1e-9;

fn invalid(msg: impl Into<String>) -> WorkloadError {
    WorkloadError::InvalidDistribution(msg.into())
}

fn check_value(v: f64) -> Result<(), WorkloadError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("values must be finite and > 0, got {v}")))
    }
}

impl DistSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            DistSpec::Deterministic { .. } => "deterministic",
            DistSpec::Exponential { .. } => "exponential",
            DistSpec::TwoPoint { .. } => "two_point",
            DistSpec::Discrete { .. } => "discrete",
        }
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        match self {
            DistSpec::Deterministic { value } => check_value(*value),
            DistSpec::Exponential { rate } => {
                if rate.is_finite() && *rate > 0.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("exponential rate must be > 0, got {rate}")))
                }
            }
            DistSpec::TwoPoint { lo, hi, p_hi } => {
                check_value(*lo)?;
                check_value(*hi)?;
                if !(lo < hi) {
                    return Err(invalid(format!("two_point needs lo < hi, got {lo} >= {hi}")));
                }
                if !(*p_hi > 0.0 && *p_hi < 1.0) {
                    return Err(invalid(format!("two_point p_hi must be in (0,1), got {p_hi}")));
                }
                Ok(())
            }
            DistSpec::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(invalid("discrete needs equally many values and probs (>= 1)"));
                }
                for v in values {
                    check_value(*v)?;
                }
                for p in probs {
                    if !(*p > 0.0 && *p <= 1.0) {
                        return Err(invalid(format!("discrete probability out of range: {p}")));
                    }
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
                    return Err(invalid(format!("discrete probabilities sum to {sum}")));
                }
                Ok(())
            }
        }
    }

    /// Draws one value. The spec must already be valid.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DistSpec::Deterministic { value } => *value,
            DistSpec::Exponential { rate } => loop {
                // Inverse CDF on (0, 1]; a zero draw is not strictly positive.
                let u: f64 = rng.random();
                let x = -(1.0 - u).ln() / rate;
                if x > 0.0 {
                    break x;
                }
            },
            DistSpec::TwoPoint { lo, hi, p_hi } => {
                let u: f64 = rng.random();
                if u < *p_hi {
                    *hi
                } else {
                    *lo
                }
            }
            DistSpec::Discrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated non-empty")
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DistSpec::Deterministic { value } => *value,
            DistSpec::Exponential { rate } => 1.0 / rate,
            DistSpec::TwoPoint { lo, hi, p_hi } => p_hi * hi + (1.0 - p_hi) * lo,
            DistSpec::Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| v * p).sum(),
        }
    }

    /// Sorted distinct support points, or `None` for continuous distributions.
    pub fn support(&self) -> Option<Vec<f64>> {
        let mut pts = match self {
            DistSpec::Deterministic { value } => vec![*value],
            DistSpec::Exponential { .. } => return None,
            DistSpec::TwoPoint { lo, hi, .. } => vec![*lo, *hi],
            DistSpec::Discrete { values, .. } => values.clone(),
        };
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Some(pts)
    }

    /// Minimal gap between distinct support points.
    pub fn min_gap(&self) -> Option<f64> {
        self.support()?
            .windows(2)
            .map(|w| w[1] - w[0])
            .min_by(f64::total_cmp)
    }
}

/// Validates `spec` and draws one value from it.
pub fn sample<R: Rng + ?Sized>(spec: &DistSpec, rng: &mut R) -> Result<f64, WorkloadError> {
    spec.validate()?;
    Ok(spec.draw(rng))
}
