use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use super::{optimal_offline, optimal_topclass_count, OracleError};
use crate::engine::{
    monotonicity_monitor, potential_sizes_agree, run_simulation, service_begin_times, EngineError,
    SimulationTrace,
};
use crate::event::EventKind;
use crate::job::{Job, JobId, Reward, ScenarioBounds, Time};
use crate::policy::{ArrivalDecision, HeadPolicy, Mud, Policy, PolicyError, ServeDecision};

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    Fail(String),
    Skip(String),
}

impl Outcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, Outcome::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Outcome::Fail(_))
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Pass => f.write_str("pass"),
            Outcome::Fail(why) => write!(f, "fail: {why}"),
            Outcome::Skip(why) => write!(f, "skip: {why}"),
        }
    }
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Deadlines longer than twice the longest service time.
fn separation_gate(jobs: &[Job]) -> Option<Outcome> {
    let b = ScenarioBounds::realized(jobs)?;
    (!b.separated()).then(|| {
        Outcome::Skip(format!(
            "d_min = {} is not above 2 * b_max = {}",
            b.d_min,
            2.0 * b.b_max
        ))
    })
}

fn run_mud(jobs: &[Job]) -> Result<SimulationTrace, Outcome> {
    run_simulation(jobs, &mut Mud::new()).map_err(|e| Outcome::Fail(format!("engine: {e}")))
}

fn reward_of(jobs: &[Job], id: JobId) -> Reward {
    let k = jobs
        .binary_search_by(|j| j.id.cmp(&id))
        .expect("trace only names jobs of its stream");
    jobs[k].reward
}

fn served_with_reward(jobs: &[Job], trace: &SimulationTrace, w: Reward) -> usize {
    trace
        .events
        .iter()
        .filter(|e| e.kind == EventKind::ServiceBegin && reward_of(jobs, e.job_id) == w)
        .count()
}

/// Constant service, at most two reward values, deadlines above twice the
/// service time: MUD's total reward and its count of top-reward jobs must
/// both match the offline optimum.
pub fn verify_theorem4(jobs: &[Job]) -> Result<Outcome, OracleError> {
    if distinct(jobs.iter().map(|j| j.service)).len() > 1 {
        return Ok(Outcome::Skip("service times are not constant".into()));
    }
    let rewards = distinct(jobs.iter().map(|j| j.reward));
    if rewards.len() > 2 {
        return Ok(Outcome::Skip(format!("{} reward values, need at most 2", rewards.len())));
    }
    if let Some(skip) = separation_gate(jobs) {
        return Ok(skip);
    }
    let Some(&w_max) = rewards.last() else {
        return Ok(Outcome::Pass);
    };
    let best = optimal_offline(jobs)?;
    let top = optimal_topclass_count(jobs, w_max)?;
    let trace = match run_mud(jobs) {
        Ok(t) => t,
        Err(fail) => return Ok(fail),
    };
    let mud_top = served_with_reward(jobs, &trace, w_max);
    if trace.total_reward != best.max_total_reward {
        return Ok(Outcome::Fail(format!(
            "reward {} vs optimum {}",
            trace.total_reward, best.max_total_reward
        )));
    }
    if mud_top != top {
        return Ok(Outcome::Fail(format!("top-reward count {mud_top} vs optimum {top}")));
    }
    Ok(Outcome::Pass)
}

/// At most two service times, constant reward, deadlines above twice the
/// longest service: MUD must serve as many jobs as the offline optimum.
pub fn verify_theorem5(jobs: &[Job]) -> Result<Outcome, OracleError> {
    if distinct(jobs.iter().map(|j| j.service)).len() > 2 {
        return Ok(Outcome::Skip("more than two service times".into()));
    }
    if distinct(jobs.iter().map(|j| j.reward)).len() > 1 {
        return Ok(Outcome::Skip("rewards are not constant".into()));
    }
    if let Some(skip) = separation_gate(jobs) {
        return Ok(skip);
    }
    if jobs.is_empty() {
        return Ok(Outcome::Pass);
    }
    let best = optimal_offline(jobs)?;
    let trace = match run_mud(jobs) {
        Ok(t) => t,
        Err(fail) => return Ok(fail),
    };
    if trace.total_reward != best.max_total_reward {
        return Ok(Outcome::Fail(format!(
            "served reward {} vs optimum {}",
            trace.total_reward, best.max_total_reward
        )));
    }
    Ok(Outcome::Pass)
}

/// Constant service: MUD and EDF keep equal queue-potential sizes at every
/// event time and begin service at the same instants.
pub fn verify_lemma1(jobs: &[Job]) -> Outcome {
    if distinct(jobs.iter().map(|j| j.service)).len() > 1 {
        return Outcome::Skip("service times are not constant".into());
    }
    let runs = run_simulation(jobs, &mut Mud::new())
        .and_then(|m| Ok((m, run_simulation(jobs, &mut HeadPolicy::edf())?)));
    let (mud, edf) = match runs {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("engine: {e}")),
    };
    if let Err((t, m, e)) = potential_sizes_agree(&mud, &edf) {
        return Outcome::Fail(format!("at t={t}: MUD potential {m}, EDF potential {e}"));
    }
    if service_begin_times(&mud) != service_begin_times(&edf) {
        return Outcome::Fail("service begin times differ".into());
    }
    for (a, b, name) in [(&mud, &edf, "MUD over EDF"), (&edf, &mud, "EDF over MUD")] {
        if let Err(t) = monotonicity_monitor(a, b) {
            return Outcome::Fail(format!("served-count monotonicity ({name}) fails at t={t}"));
        }
    }
    Outcome::Pass
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("engine rejected the schedule: {0}")]
    Engine(#[from] EngineError),
    #[error("replay diverged: {0}")]
    Mismatch(String),
}

/// Serves jobs in a fixed order, dropping only jobs that have expired.
struct Script {
    plan: VecDeque<JobId>,
    waiting: Vec<Job>,
}

impl Policy for Script {
    fn name(&self) -> &'static str {
        "witness"
    }

    fn on_arrival(
        &mut self,
        job: Job,
        _now: Time,
        _busy_until: Time,
    ) -> Result<ArrivalDecision, PolicyError> {
        self.waiting.push(job);
        Ok(ArrivalDecision::Accepted {
            position: self.waiting.len() - 1,
        })
    }

    fn select(&mut self, now: Time) -> ServeDecision {
        if let Some(&next) = self.plan.front() {
            if let Some(k) = self.waiting.iter().position(|j| j.id == next) {
                self.plan.pop_front();
                return ServeDecision::Serve(self.waiting.remove(k).id);
            }
        }
        if let Some(k) = self.waiting.iter().position(|j| j.is_expired(now)) {
            return ServeDecision::Drop(self.waiting.remove(k).id);
        }
        ServeDecision::Idle
    }

    fn waiting(&self) -> Box<dyn Iterator<Item = &Job> + '_> {
        Box::new(self.waiting.iter())
    }

    fn len(&self) -> usize {
        self.waiting.len()
    }
}

/// Plays an oracle schedule through the engine. The engine enforces
/// non-preemption, start-by-expiry and no forced idling; the replay must
/// also start every job at the time the witness gives.
pub fn replay_witness(
    jobs: &[Job],
    witness: &[(JobId, Time)],
) -> Result<SimulationTrace, ReplayError> {
    let mut script = Script {
        plan: witness.iter().map(|&(id, _)| id).collect(),
        waiting: Vec::new(),
    };
    let trace = run_simulation(jobs, &mut script)?;
    let starts: Vec<(JobId, Time)> = trace
        .events
        .iter()
        .filter(|e| e.kind == EventKind::ServiceBegin)
        .map(|e| (e.job_id, e.time))
        .collect();
    if starts != witness {
        return Err(ReplayError::Mismatch(format!(
            "engine started {starts:?}, witness says {witness:?}"
        )));
    }
    Ok(trace)
}
