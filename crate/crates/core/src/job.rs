//! Jobs, attribute bounds and the closed-form helpers built on them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Time, in seconds.
pub type Time = f64;

/// Abstract reward units.
pub type Reward = f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("job {id}: {field} must be finite and strictly positive, got {value}")]
    NonPositive {
        id: JobId,
        field: &'static str,
        value: f64,
    },
    #[error("job {id}: arrival time must be finite and non-negative, got {value}")]
    BadArrival { id: JobId, value: f64 },
    #[error("job stream out of order at job {id}: {reason}")]
    OutOfOrder { id: JobId, reason: &'static str },
    #[error("invalid bounds: {0}")]
    Bounds(String),
}

/// Index of a job within its stream; strictly increasing with arrival order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(pub u64);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One unit of work. The deadline is relative and bounds the time until
/// service *begins*; the job may finish after its expiry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    pub arrival: Time,
    pub service: Time,
    pub deadline: Time,
    pub reward: Reward,
    pub expiry: Time,
}

fn positive(id: JobId, field: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::NonPositive { id, field, value })
    }
}

impl Job {
    pub fn new(
        id: u64,
        arrival: Time,
        service: Time,
        deadline: Time,
        reward: Reward,
    ) -> Result<Self, ModelError> {
        let id = JobId(id);
        if !(arrival.is_finite() && arrival >= 0.0) {
            return Err(ModelError::BadArrival { id, value: arrival });
        }
        let service = positive(id, "service", service)?;
        let deadline = positive(id, "deadline", deadline)?;
        let reward = positive(id, "reward", reward)?;
        Ok(Self {
            id,
            arrival,
            service,
            deadline,
            reward,
            expiry: arrival + deadline,
        })
    }

    /// Reward per unit of service time.
    #[inline]
    pub fn ratio(&self) -> f64 {
        self.reward / self.service
    }

    /// `expiry < now`: the job can no longer begin service on time.
    #[inline]
    pub fn is_expired(&self, now: Time) -> bool {
        self.expiry < now
    }
}

/// Absolute expiry `arrival + deadline`.
pub fn expiry(job: &Job) -> Time {
    job.arrival + job.deadline
}

/// Checks that a stream is usable as simulation input: ids strictly
/// increasing, arrival times non-decreasing.
pub fn validate_stream(jobs: &[Job]) -> Result<(), ModelError> {
    for pair in jobs.windows(2) {
        if pair[1].id <= pair[0].id {
            return Err(ModelError::OutOfOrder {
                id: pair[1].id,
                reason: "ids must strictly increase",
            });
        }
        if pair[1].arrival < pair[0].arrival {
            return Err(ModelError::OutOfOrder {
                id: pair[1].id,
                reason: "arrival times must not decrease",
            });
        }
    }
    Ok(())
}

/// Attribute bounds of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBounds {
    pub b_min: Time,
    pub b_max: Time,
    pub d_min: Time,
    pub d_max: Time,
    pub w_min: Reward,
    pub w_max: Reward,
    /// Minimal gap between two distinct reward values; absent for
    /// continuous reward distributions.
    pub delta_w: Option<Reward>,
    /// Inter-arrival `b_min - delta` used by the adversarial construction.
    pub a_delta: Option<Time>,
}

impl ScenarioBounds {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ordered = |lo: f64, hi: f64, what: &str| {
            if lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi {
                Ok(())
            } else {
                Err(ModelError::Bounds(format!(
                    "{what}: need 0 < min <= max, got [{lo}, {hi}]"
                )))
            }
        };
        ordered(self.b_min, self.b_max, "service")?;
        ordered(self.d_min, self.d_max, "deadline")?;
        ordered(self.w_min, self.w_max, "reward")?;
        if let Some(dw) = self.delta_w {
            if !(dw.is_finite() && dw > 0.0) {
                return Err(ModelError::Bounds(format!("delta_w must be > 0, got {dw}")));
            }
        }
        if let Some(a) = self.a_delta {
            if !(a < self.b_min) {
                return Err(ModelError::Bounds(format!(
                    "a_delta {a} must be below b_min {}",
                    self.b_min
                )));
            }
        }
        Ok(())
    }

    /// Bounds realized by a concrete stream. `delta_w` is the smallest gap
    /// between distinct realized rewards, when at least two distinct values
    /// occur. Returns `None` for an empty stream.
    pub fn realized(jobs: &[Job]) -> Option<Self> {
        let first = jobs.first()?;
        let mut b = (first.service, first.service);
        let mut d = (first.deadline, first.deadline);
        let mut w = (first.reward, first.reward);
        for j in jobs {
            b = (b.0.min(j.service), b.1.max(j.service));
            d = (d.0.min(j.deadline), d.1.max(j.deadline));
            w = (w.0.min(j.reward), w.1.max(j.reward));
        }
        let mut rewards: Vec<f64> = jobs.iter().map(|j| j.reward).collect();
        rewards.sort_by(f64::total_cmp);
        rewards.dedup();
        let delta_w = rewards
            .windows(2)
            .map(|p| p[1] - p[0])
            .min_by(f64::total_cmp);
        Some(Self {
            b_min: b.0,
            b_max: b.1,
            d_min: d.0,
            d_max: d.1,
            w_min: w.0,
            w_max: w.1,
            delta_w,
            a_delta: None,
        })
    }

    /// Whether the deadline/service separation `d_min > 2 b_max` holds.
    pub fn separated(&self) -> bool {
        self.d_min > 2.0 * self.b_max
    }
}

/// Upper bound on the queue-potential size: `ceil(d_max / b_min)`.
pub fn queue_length_bound(bounds: &ScenarioBounds) -> Result<usize, ModelError> {
    if !(bounds.b_min.is_finite() && bounds.b_min > 0.0) {
        return Err(ModelError::Bounds(format!(
            "b_min must be > 0, got {}",
            bounds.b_min
        )));
    }
    if !(bounds.d_max.is_finite() && bounds.d_max >= 0.0) {
        return Err(ModelError::Bounds(format!(
            "d_max must be finite, got {}",
            bounds.d_max
        )));
    }
    Ok((bounds.d_max / bounds.b_min).ceil() as usize)
}
