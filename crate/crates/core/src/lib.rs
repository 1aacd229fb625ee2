//! Single-server queue simulation with deadlines and rewards.
//!
//! Jobs arrive with a service time, a relative deadline that bounds the wait
//! before service begins, and a reward. Policies decide which waiting job to
//! serve and which to drop; the engine runs them over a job stream and
//! records a trace; the oracle computes offline optima for small instances.

pub mod engine;
pub mod event;
pub mod experiment;
pub mod job;
pub mod oracle;
pub mod policy;
pub mod workload;

pub use job::{expiry, queue_length_bound, Job, JobId, ModelError, Reward, ScenarioBounds, Time};
