//! Scheduling policies.
//!
//! A policy owns the order of its waiting jobs. The engine owns the clock and
//! the server: it tells the policy about arrivals and asks it for one
//! decision at a time whenever the server is free, applying drops until the
//! policy either starts a job or reports that it is empty.

mod basic;
mod cmu;
mod mud;
mod queue;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::job::{Job, JobId, Reward, Time};

pub use basic::{edf_select, fcfs_select, greedy_select, medf_select, HeadPolicy};
pub use cmu::{cmu_theta_select, ClassCoeff, CmuTheta, RewardClasses};
pub use mud::{mud_on_arrival, mud_select, Mud};
pub use queue::{queue_offsets, OrderedQueue, QueueOffset, QueueOrder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("no class coefficients for job {job} with reward {reward}")]
    NoClass { job: JobId, reward: Reward },
    #[error("unknown policy `{0}`; valid names: edf, medf, mud, cmutheta, cmutheta_edf, greedy, fcfs")]
    UnknownPolicy(String),
}

/// Outcome of handing an arriving job to a policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalDecision {
    /// Queued at this 0-based position.
    Accepted { position: usize },
    /// Queued, and the named waiting job was dropped to make room.
    AcceptedWithDrop { dropped: JobId },
    /// The arriving job itself was dropped.
    Rejected,
}

/// One step of a policy's choice when the server is free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServeDecision {
    Serve(JobId),
    Drop(JobId),
    Idle,
}

pub trait Policy: Send {
    fn name(&self) -> &'static str;

    /// Hands over an arriving job. `busy_until` is the absolute time at
    /// which the server becomes free (`now` when it is idle).
    fn on_arrival(
        &mut self,
        job: Job,
        now: Time,
        busy_until: Time,
    ) -> Result<ArrivalDecision, PolicyError>;

    /// Next decision for a free server. `Serve` and `Drop` remove the job
    /// from the policy's queue.
    fn select(&mut self, now: Time) -> ServeDecision;

    /// Waiting jobs in the policy's service order.
    fn waiting(&self) -> Box<dyn Iterator<Item = &Job> + '_>;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Edf,
    Medf,
    Mud,
    CmuTheta,
    CmuThetaEdf,
    Greedy,
    Fcfs,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::Edf,
        PolicyKind::Medf,
        PolicyKind::Mud,
        PolicyKind::CmuTheta,
        PolicyKind::CmuThetaEdf,
        PolicyKind::Greedy,
        PolicyKind::Fcfs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Edf => "edf",
            PolicyKind::Medf => "medf",
            PolicyKind::Mud => "mud",
            PolicyKind::CmuTheta => "cmutheta",
            PolicyKind::CmuThetaEdf => "cmutheta_edf",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Fcfs => "fcfs",
        }
    }

    /// Builds a fresh policy. `classes` is only consulted by the class-based
    /// policies.
    pub fn build(self, classes: &RewardClasses) -> Box<dyn Policy> {
        match self {
            PolicyKind::Edf => Box::new(HeadPolicy::edf()),
            PolicyKind::Medf => Box::new(HeadPolicy::medf()),
            PolicyKind::Mud => Box::new(Mud::new()),
            PolicyKind::CmuTheta => Box::new(CmuTheta::new(classes.clone(), QueueOrder::Fcfs)),
            PolicyKind::CmuThetaEdf => Box::new(CmuTheta::new(classes.clone(), QueueOrder::Edf)),
            PolicyKind::Greedy => Box::new(HeadPolicy::greedy()),
            PolicyKind::Fcfs => Box::new(HeadPolicy::fcfs()),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| PolicyError::UnknownPolicy(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        let err = "cbs".parse::<PolicyKind>().unwrap_err();
        assert!(err.to_string().contains("cmutheta_edf"));
    }
}
