//! Seeded job-stream generation.

mod config;
mod dist;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::job::{Job, ModelError, ScenarioBounds, Time};

pub use config::{parse_config, ConfigError};
pub use dist::{sample, DistSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkloadError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Arrival rates of the two studies.
pub const LAMBDA_GRID: [f64; 5] = [0.9, 1.2, 1.5, 1.8, 2.1];
/// Service rate of both studies.
pub const LAMBDA_SERVICE: f64 = 1.0;
/// Deadline rate of both studies.
pub const LAMBDA_DEADLINE: f64 = 0.005;
/// Reward rate of the exponential-reward study.
pub const LAMBDA_REWARD: f64 = 0.1;
/// Reward levels and high-level probability of the dual-reward study.
pub const DUAL_REWARDS: (f64, f64, f64) = (4.0, 10.0, 0.5);
/// Arrivals per study run.
pub const STUDY_JOBS: usize = 100_000;
/// Number of reward classes used when a reward distribution is continuous.
pub const DEFAULT_REWARD_CLASSES: usize = 16;

/// Everything needed to regenerate a job stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub arrival: DistSpec,
    pub service: DistSpec,
    pub deadline: DistSpec,
    pub reward: DistSpec,
    pub n_jobs: usize,
    pub seed: u64,
    /// Declared bounds; when absent they are derived from the distributions
    /// or, for unbounded ones, from the realized stream.
    pub bounds: Option<ScenarioBounds>,
    /// Class count for class-based policies on continuous rewards.
    pub reward_classes: usize,
}

impl ScenarioSpec {
    pub fn new(
        arrival: DistSpec,
        service: DistSpec,
        deadline: DistSpec,
        reward: DistSpec,
        n_jobs: usize,
        seed: u64,
    ) -> Self {
        Self {
            arrival,
            service,
            deadline,
            reward,
            n_jobs,
            seed,
            bounds: None,
            reward_classes: DEFAULT_REWARD_CLASSES,
        }
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        for d in [&self.arrival, &self.service, &self.deadline, &self.reward] {
            d.validate()?;
        }
        if self.n_jobs == 0 {
            return Err(WorkloadError::InvalidScenario("n_jobs must be >= 1".into()));
        }
        if self.reward_classes == 0 {
            return Err(WorkloadError::InvalidScenario("reward_classes must be >= 1".into()));
        }
        if let Some(b) = &self.bounds {
            b.validate()?;
        }
        Ok(())
    }

    /// Bounds implied by finite-support distributions; `None` when any of
    /// service, deadline or reward is unbounded.
    pub fn derived_bounds(&self) -> Option<ScenarioBounds> {
        let b = self.service.support()?;
        let d = self.deadline.support()?;
        let w = self.reward.support()?;
        Some(ScenarioBounds {
            b_min: b[0],
            b_max: *b.last()?,
            d_min: d[0],
            d_max: *d.last()?,
            w_min: w[0],
            w_max: *w.last()?,
            delta_w: self.reward.min_gap(),
            a_delta: None,
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn with_jobs(&self, n_jobs: usize) -> Self {
        Self { n_jobs, ..self.clone() }
    }

    /// Serializes to the `key = value` config format.
    pub fn to_config_string(&self) -> String {
        config::render(self)
    }
}

/// Generates `n_jobs` jobs with ids `1..=n`. Arrival times are the running
/// sum of inter-arrival draws. Identical specs yield bit-identical streams.
pub fn generate_stream(spec: &ScenarioSpec) -> Result<Vec<Job>, WorkloadError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut t: Time = 0.0;
    let mut jobs = Vec::with_capacity(spec.n_jobs);
    for i in 1..=spec.n_jobs as u64 {
        t += spec.arrival.draw(&mut rng);
        let b = spec.service.draw(&mut rng);
        let d = spec.deadline.draw(&mut rng);
        let w = spec.reward.draw(&mut rng);
        jobs.push(Job::new(i, t, b, d, w)?);
    }
    Ok(jobs)
}

/// Number of filler jobs per adversarial repeat: `ceil(d_max / delta)`.
pub fn adversarial_fillers(d_max: Time, delta: Time) -> usize {
    (d_max / delta).ceil() as usize
}

/// Deterministic stream built to force one reward-improving displacement per
/// repeat. Each repeat is a flush job after a gap that drains any previous
/// work, `ceil(d_max / delta)` low-reward fillers spaced `b_min - delta`
/// apart, then one high-reward job at the same spacing. Every job has
/// service `b_min` and deadline `d_max`.
pub fn adversarial_mud_stream(
    bounds: &ScenarioBounds,
    delta: Time,
    repeats: usize,
) -> Result<Vec<Job>, WorkloadError> {
    bounds.validate()?;
    if !(delta > 0.0 && delta < bounds.b_min) {
        return Err(WorkloadError::InvalidScenario(format!(
            "delta must lie in (0, b_min = {}), got {delta}",
            bounds.b_min
        )));
    }
    let b = bounds.b_min;
    let d = bounds.d_max;
    let a_delta = b - delta;
    let n = adversarial_fillers(d, delta);
    // Strictly longer than the last possible start plus one service.
    let flush_gap = d + 2.0 * b;

    let mut jobs = Vec::with_capacity(repeats * (n + 2));
    let mut t: Time = 0.0;
    let mut id = 0u64;
    let mut push = |t: Time, w: f64, jobs: &mut Vec<Job>| -> Result<(), WorkloadError> {
        id += 1;
        jobs.push(Job::new(id, t, b, d, w)?);
        Ok(())
    };
    for _ in 0..repeats {
        t += flush_gap;
        push(t, bounds.w_min, &mut jobs)?;
        for _ in 0..n {
            t += a_delta;
            push(t, bounds.w_min, &mut jobs)?;
        }
        t += a_delta;
        push(t, bounds.w_max, &mut jobs)?;
    }
    Ok(jobs)
}

/// The two study scenario families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    /// Exponential arrivals, service and deadlines; rewards 4 or 10.
    Mmb,
    /// Exponential arrivals, service, deadlines and rewards.
    Mmm,
}

impl Study {
    pub fn as_str(self) -> &'static str {
        match self {
            Study::Mmb => "mmb",
            Study::Mmm => "mmm",
        }
    }

    pub fn scenario(self, lambda_a: f64, n_jobs: usize, seed: u64) -> ScenarioSpec {
        let (lo, hi, p) = DUAL_REWARDS;
        let reward = match self {
            Study::Mmb => DistSpec::TwoPoint { lo, hi, p_hi: p },
            Study::Mmm => DistSpec::Exponential { rate: LAMBDA_REWARD },
        };
        ScenarioSpec::new(
            DistSpec::Exponential { rate: lambda_a },
            DistSpec::Exponential { rate: LAMBDA_SERVICE },
            DistSpec::Exponential { rate: LAMBDA_DEADLINE },
            reward,
            n_jobs,
            seed,
        )
    }
}

impl std::str::FromStr for Study {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mmb" => Ok(Study::Mmb),
            "mmm" => Ok(Study::Mmm),
            other => Err(format!("unknown study `{other}` (expected mmb or mmm)")),
        }
    }
}
