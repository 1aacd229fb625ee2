//! Discrete-event engine.
//!
//! The engine owns the clock and the server and asks the policy for one
//! decision at a time. Completions fire before arrivals at equal times, and
//! arrivals are taken in id order. Each run checks the policy contracts as it
//! goes: no idling while jobs could still start on time, only waiting and
//! unexpired jobs are served, the policy's queue matches the engine's job
//! accounting, and the queue potential stays within its length bound.

mod compare;
mod trace;

use serde::Serialize;
use thiserror::Error;

use crate::event::{
    classify_event, ClassifyError, EventKind, EventRecord, QeClass, QueueSnapshot, ServiceRegime,
};
use crate::job::{validate_stream, Job, JobId, ModelError, Reward, ScenarioBounds, Time};
use crate::policy::{ArrivalDecision, Policy, PolicyError, ServeDecision};

pub use compare::{
    compare_traces, monotonicity_monitor, potential_sizes_agree, service_begin_times,
    CompareError, EpochDelta, Relation,
};
pub use trace::{write_metrics_json, write_trace_csv, Metrics};

/// How much of a run to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    /// Every event record, with queue potential and cumulative reward.
    Full,
    /// Counts and epochs only.
    Summary,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid job stream: {0}")]
    Stream(#[from] ModelError),
    #[error("policy error: {0}")]
    Policy(#[from] PolicyError),
    #[error("contract violation at t={time}: {violation}")]
    Contract { time: Time, violation: Violation },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Violation {
    #[error("idle with {potential} job(s) still able to start on time")]
    ForcedIdle { potential: usize },
    #[error("job {0} is not waiting")]
    NotWaiting(JobId),
    #[error("job {id} served after its expiry {expiry}")]
    ServedExpired { id: JobId, expiry: Time },
    #[error("policy holds {policy} job(s), engine counts {engine} waiting")]
    Conservation { policy: usize, engine: usize },
    #[error("queue potential {size} exceeds bound {bound}")]
    QueueBound { size: usize, bound: usize },
    #[error("idle while still holding {0} expired job(s)")]
    Stalled(usize),
    #[error("{0}")]
    Classify(#[from] ClassifyError),
}

/// An instant at which the queue is empty and the server idle. `arrivals`
/// counts jobs arrived so far, which identifies the gap before the next
/// arrival; `reward` is the reward of every job started so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Epoch {
    pub time: Time,
    pub arrivals: usize,
    pub served: usize,
    pub reward: Reward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub policy: String,
    pub stream_checksum: u64,
    pub n_jobs: usize,
    /// Empty in [`TraceMode::Summary`].
    pub events: Vec<EventRecord>,
    pub served: usize,
    pub dropped: usize,
    pub total_reward: Reward,
    pub epochs: Vec<Epoch>,
    /// `ceil(d_max / b_min)` over the stream.
    pub queue_bound: Option<usize>,
    /// Largest queue potential seen; only tracked in [`TraceMode::Full`].
    pub max_potential: Option<usize>,
    pub max_waiting: usize,
    pub regime: ServiceRegime,
}

impl SimulationTrace {
    pub fn metrics(&self) -> Metrics {
        Metrics::from(self)
    }
}

/// FNV-1a over every job field.
pub fn stream_checksum(jobs: &[Job]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for byte in x.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for j in jobs {
        eat(j.id.0);
        eat(j.arrival.to_bits());
        eat(j.service.to_bits());
        eat(j.deadline.to_bits());
        eat(j.reward.to_bits());
    }
    h
}

/// The waiting jobs that would all start on time if nothing else arrived:
/// scan in service order from `now + residual`, keep a job iff its start is
/// no later than its expiry, and advance the clock only for kept jobs.
pub fn compute_queue_potential<'a>(
    waiting: impl IntoIterator<Item = &'a Job>,
    now: Time,
    residual: Time,
) -> Vec<JobId> {
    let mut out = Vec::new();
    scan_potential(waiting, now + residual, |j| out.push(j.id));
    out
}

fn scan_potential<'a>(
    waiting: impl IntoIterator<Item = &'a Job>,
    free_at: Time,
    mut keep: impl FnMut(&'a Job),
) {
    let mut start = free_at;
    for j in waiting {
        if start <= j.expiry {
            keep(j);
            start += j.service;
        }
    }
}

/// Size and total reward of the queue potential for a server free at
/// `free_at`.
fn potential_of<'a>(waiting: impl IntoIterator<Item = &'a Job>, free_at: Time) -> (usize, Reward) {
    let (mut n, mut w) = (0, 0.0);
    scan_potential(waiting, free_at, |j| {
        n += 1;
        w += j.reward;
    });
    (n, w)
}

fn regime_of(jobs: &[Job]) -> ServiceRegime {
    match jobs.split_first() {
        Some((first, rest)) if rest.iter().any(|j| j.service != first.service) => {
            ServiceRegime::General
        }
        _ => ServiceRegime::Deterministic,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pending,
    Waiting,
    Started,
    Dropped,
}

struct Engine<'a> {
    jobs: &'a [Job],
    policy: &'a mut dyn Policy,
    mode: TraceMode,
    regime: ServiceRegime,
    bound: Option<usize>,
    status: Vec<Status>,
    now: Time,
    /// Job in service and its completion time.
    in_service: Option<(usize, Time)>,
    arrived: usize,
    waiting: usize,
    started: usize,
    dropped: usize,
    started_reward: Reward,
    events: Vec<EventRecord>,
    epochs: Vec<Epoch>,
    max_potential: Option<usize>,
    max_waiting: usize,
}

impl<'a> Engine<'a> {
    fn violation(&self, v: impl Into<Violation>) -> EngineError {
        EngineError::Contract {
            time: self.now,
            violation: v.into(),
        }
    }

    fn free_at(&self) -> Time {
        self.in_service.map_or(self.now, |(_, end)| end.max(self.now))
    }

    fn index_of(&self, id: JobId) -> Option<usize> {
        self.jobs.binary_search_by(|j| j.id.cmp(&id)).ok()
    }

    fn potential(&self) -> (usize, Reward) {
        potential_of(self.policy.waiting(), self.free_at())
    }

    fn snapshot(&self, potential: Option<usize>) -> QueueSnapshot {
        QueueSnapshot {
            server_busy: self.in_service.is_some(),
            waiting: self.waiting,
            potential,
        }
    }

    /// Checks the engine's accounting and the queue bound for the current
    /// state, returning the potential when it was computed.
    fn check_state(&mut self) -> Result<Option<(usize, Reward)>, EngineError> {
        if self.policy.len() != self.waiting {
            return Err(self.violation(Violation::Conservation {
                policy: self.policy.len(),
                engine: self.waiting,
            }));
        }
        debug_assert_eq!(
            self.arrived,
            self.started + self.dropped + self.waiting,
            "engine job accounting"
        );
        self.max_waiting = self.max_waiting.max(self.waiting);
        // The potential is a subset of the waiting jobs, so it only needs
        // computing when the waiting count alone does not settle the bound.
        let need = self.mode == TraceMode::Full || self.bound.is_some_and(|b| self.waiting > b);
        if !need {
            return Ok(None);
        }
        let (size, reward) = self.potential();
        if let Some(bound) = self.bound {
            if size > bound {
                return Err(self.violation(Violation::QueueBound { size, bound }));
            }
        }
        if self.mode == TraceMode::Full {
            self.max_potential = Some(self.max_potential.unwrap_or(0).max(size));
        }
        Ok(Some((size, reward)))
    }

    fn record(&mut self, kind: EventKind, id: JobId, qe: Option<QeClass>, state: (usize, Reward)) {
        if self.mode == TraceMode::Full {
            self.events.push(EventRecord {
                time: self.now,
                kind,
                job_id: id,
                qe_class: qe,
                queue_potential_size: state.0,
                cumulative_reward: self.started_reward + state.1,
            });
        }
    }

    /// Records `kind` with the current state, classified against nothing
    /// (used for events whose class does not depend on the state pair).
    fn record_now(&mut self, kind: EventKind, id: JobId) -> Result<(), EngineError> {
        let state = self.check_state()?;
        if let Some(state) = state.filter(|_| self.mode == TraceMode::Full) {
            let after = self.snapshot(Some(state.0));
            let qe = classify_event(&after, kind, &after, self.regime)
                .map_err(|e| self.violation(e))?;
            self.record(kind, id, qe, state);
        }
        Ok(())
    }

    fn take_waiting(&mut self, id: JobId) -> Result<usize, EngineError> {
        match self.index_of(id) {
            Some(k) if self.status[k] == Status::Waiting => Ok(k),
            _ => Err(self.violation(Violation::NotWaiting(id))),
        }
    }

    fn drop_job(&mut self, k: usize) -> Result<(), EngineError> {
        self.status[k] = Status::Dropped;
        self.waiting -= 1;
        self.dropped += 1;
        let job = self.jobs[k];
        if job.is_expired(self.now) {
            // Noticed lazily, at the decision point that drops it.
            self.record_now(EventKind::ExpiryPassed, job.id)?;
        }
        self.record_now(EventKind::Drop, job.id)
    }

    /// Asks the policy for decisions until it starts a job or goes idle.
    fn dispatch(&mut self) -> Result<(), EngineError> {
        debug_assert!(self.in_service.is_none());
        loop {
            match self.policy.select(self.now) {
                ServeDecision::Serve(id) => {
                    let k = self.take_waiting(id)?;
                    let job = self.jobs[k];
                    if job.is_expired(self.now) {
                        return Err(self.violation(Violation::ServedExpired {
                            id,
                            expiry: job.expiry,
                        }));
                    }
                    self.status[k] = Status::Started;
                    self.waiting -= 1;
                    self.started += 1;
                    self.started_reward += job.reward;
                    self.in_service = Some((k, self.now + job.service));
                    return self.record_now(EventKind::ServiceBegin, id);
                }
                ServeDecision::Drop(id) => {
                    let k = self.take_waiting(id)?;
                    self.drop_job(k)?;
                }
                ServeDecision::Idle => {
                    let (potential, _) = self.potential();
                    if potential > 0 {
                        return Err(self.violation(Violation::ForcedIdle { potential }));
                    }
                    if self.waiting > 0 {
                        return Err(self.violation(Violation::Stalled(self.waiting)));
                    }
                    return Ok(());
                }
            }
        }
    }

    fn complete(&mut self, end: Time) -> Result<(), EngineError> {
        let (k, _) = self.in_service.take().expect("completion without service");
        self.now = end;
        self.record_now(EventKind::ServiceComplete, self.jobs[k].id)?;
        self.dispatch()?;
        if self.in_service.is_none() && self.waiting == 0 {
            self.epochs.push(Epoch {
                time: self.now,
                arrivals: self.arrived,
                served: self.started,
                reward: self.started_reward,
            });
        }
        Ok(())
    }

    fn arrive(&mut self, k: usize) -> Result<(), EngineError> {
        let job = self.jobs[k];
        self.now = job.arrival;
        let was_busy = self.in_service.is_some();
        let before_potential = if self.mode == TraceMode::Full {
            Some(self.potential().0)
        } else {
            None
        };
        let before = self.snapshot(before_potential);

        let decision = self.policy.on_arrival(job, self.now, self.free_at())?;
        self.status[k] = Status::Waiting;
        self.arrived += 1;
        self.waiting += 1;
        let dropped = match decision {
            ArrivalDecision::Accepted { .. } => None,
            ArrivalDecision::AcceptedWithDrop { dropped } => Some(self.take_waiting(dropped)?),
            ArrivalDecision::Rejected => Some(k),
        };
        if let Some(d) = dropped {
            self.status[d] = Status::Dropped;
            self.waiting -= 1;
            self.dropped += 1;
        }

        // An arrival to an idle server is reported once the job has started.
        let mut begun = None;
        if !was_busy {
            let before_started = self.started;
            self.dispatch_quiet()?;
            if self.started > before_started {
                begun = self.in_service.map(|(s, _)| self.jobs[s].id);
            }
        }

        let state = self.check_state()?;
        if let Some(state) = state.filter(|_| self.mode == TraceMode::Full) {
            let after = self.snapshot(Some(state.0));
            let qe = classify_event(&before, EventKind::Arrival, &after, self.regime)
                .map_err(|e| self.violation(e))?;
            self.record(EventKind::Arrival, job.id, qe, state);
            if let Some(d) = dropped {
                self.record(EventKind::Drop, self.jobs[d].id, Some(QeClass::Qe7), state);
            }
            if let Some(id) = begun {
                self.record(EventKind::ServiceBegin, id, Some(QeClass::Qe5), state);
            }
        }
        Ok(())
    }

    /// Dispatch for an arrival to an idle server. With an empty queue before
    /// the arrival the only possible outcome is starting the arriving job.
    fn dispatch_quiet(&mut self) -> Result<(), EngineError> {
        let mode = self.mode;
        self.mode = TraceMode::Summary;
        let out = self.dispatch();
        self.mode = mode;
        out
    }

    fn run(mut self) -> Result<SimulationTrace, EngineError> {
        let mut next = 0;
        loop {
            let arrival = self.jobs.get(next).map(|j| j.arrival);
            match (self.in_service, arrival) {
                (Some((_, end)), Some(t)) if end <= t => self.complete(end)?,
                (Some((_, end)), None) => self.complete(end)?,
                (_, Some(_)) => {
                    self.arrive(next)?;
                    next += 1;
                }
                (None, None) => break,
            }
        }
        if self.waiting > 0 || !self.policy.is_empty() {
            return Err(self.violation(Violation::Conservation {
                policy: self.policy.len(),
                engine: self.waiting,
            }));
        }
        Ok(SimulationTrace {
            policy: self.policy.name().to_string(),
            stream_checksum: stream_checksum(self.jobs),
            n_jobs: self.jobs.len(),
            events: self.events,
            served: self.started,
            dropped: self.dropped,
            total_reward: self.started_reward,
            epochs: self.epochs,
            queue_bound: self.bound,
            max_potential: self.max_potential,
            max_waiting: self.max_waiting,
            regime: self.regime,
        })
    }
}

/// Runs `policy` over `jobs` and returns the full event trace.
pub fn run_simulation(jobs: &[Job], policy: &mut dyn Policy) -> Result<SimulationTrace, EngineError> {
    run(jobs, policy, TraceMode::Full)
}

/// Runs `policy` over `jobs`, keeping as much of the trace as `mode` asks.
/// The stream must have strictly increasing ids and non-decreasing arrivals.
pub fn run(
    jobs: &[Job],
    policy: &mut dyn Policy,
    mode: TraceMode,
) -> Result<SimulationTrace, EngineError> {
    validate_stream(jobs)?;
    let bound = ScenarioBounds::realized(jobs)
        .map(|b| (b.d_max / b.b_min).ceil() as usize);
    Engine {
        jobs,
        policy,
        mode,
        regime: regime_of(jobs),
        bound,
        status: vec![Status::Pending; jobs.len()],
        now: 0.0,
        in_service: None,
        arrived: 0,
        waiting: 0,
        started: 0,
        dropped: 0,
        started_reward: 0.0,
        events: Vec::new(),
        epochs: Vec::new(),
        max_potential: None,
        max_waiting: 0,
    }
    .run()
}

/// Times at which the queue was empty and the server idle.
pub fn empty_queue_epochs(trace: &SimulationTrace) -> Vec<Time> {
    trace.epochs.iter().map(|e| e.time).collect()
}
