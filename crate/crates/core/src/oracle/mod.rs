//! Exhaustive offline optimum for small instances, and the verifiers that
//! compare policies against it.
//!
//! The search sees the whole instance in advance but plays by the same rules
//! as the engine: no preemption, no idling while a queued job can still
//! start, and a decision at a completion only sees jobs that arrived
//! strictly earlier. When the server is idle the next arrival starts at once.

mod instance;
mod verify;

use std::collections::HashMap;

use thiserror::Error;

use crate::job::{validate_stream, Job, JobId, ModelError, Reward, Time};

pub use instance::{parse_instance, write_instance, InstanceError};
pub use verify::{
    replay_witness, verify_lemma1, verify_theorem4, verify_theorem5, Outcome, ReplayError,
};

pub const DEFAULT_JOB_LIMIT: usize = 14;

/// Memo times are rounded to this grid.
const TIME_QUANTUM: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance has {jobs} jobs, limit is {limit}")]
    TooLarge { jobs: usize, limit: usize },
    #[error("invalid instance: {0}")]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub max_total_reward: Reward,
    /// Served jobs with the largest reward, maximized after the total.
    pub max_topclass_count: usize,
    /// `(job, start)` in service order.
    pub witness: Vec<(JobId, Time)>,
}

/// What the search maximizes, compared lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
struct Score(f64, u32);

impl std::ops::Add for Score {
    type Output = Score;
    fn add(self, o: Score) -> Score {
        Score(self.0 + o.0, self.1 + o.1)
    }
}

/// Keyed by quantized time and ready set.
type Memo = HashMap<(i64, u32), (Score, Option<usize>)>;

struct Search<'a> {
    jobs: &'a [Job],
    value: Vec<Score>,
    memo: Option<Memo>,
}

impl Search<'_> {
    /// Best score from a server that frees at `t`, with `served` already
    /// used. Returns the score and the job to start at `t`, if any.
    fn best(&mut self, t: Time, served: u32) -> (Score, Option<usize>) {
        // Jobs that have arrived strictly before t and can still start.
        let mut ready = 0u32;
        let mut next_arrival = None;
        for (k, j) in self.jobs.iter().enumerate() {
            if served & (1 << k) != 0 {
                continue;
            }
            if j.arrival < t {
                if j.expiry >= t {
                    ready |= 1 << k;
                }
            } else if next_arrival.is_none() {
                next_arrival = Some(k);
            }
        }
        if ready == 0 {
            // Idle until the next arrival, which starts at once.
            let Some(k) = next_arrival else {
                return (Score::default(), None);
            };
            let j = self.jobs[k];
            let (rest, _) = self.best(j.arrival + j.service, served | (1 << k));
            return (rest + self.value[k], Some(k));
        }

        let key = ((t / TIME_QUANTUM).round() as i64, ready);
        if let Some(hit) = self.memo.as_ref().and_then(|m| m.get(&key)) {
            return *hit;
        }
        let mut best: Option<(Score, usize)> = None;
        let mut bits = ready;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let (rest, _) = self.best(t + self.jobs[k].service, served | (1 << k));
            let score = rest + self.value[k];
            if best.map_or(true, |(b, _)| score > b) {
                best = Some((score, k));
            }
        }
        let (score, k) = best.expect("ready set is non-empty");
        let out = (score, Some(k));
        if let Some(m) = self.memo.as_mut() {
            m.insert(key, out);
        }
        out
    }

    fn witness(&mut self) -> Vec<(JobId, Time)> {
        let mut out = Vec::new();
        let (mut t, mut served) = (f64::NEG_INFINITY, 0u32);
        while let (_, Some(k)) = self.best(t, served) {
            let j = self.jobs[k];
            let start = if j.arrival < t { t } else { j.arrival };
            out.push((j.id, start));
            t = start + j.service;
            served |= 1 << k;
        }
        out
    }
}

fn solve(
    jobs: &[Job],
    limit: usize,
    memoize: bool,
    value: impl Fn(&Job) -> Score,
) -> Result<(Score, Vec<(JobId, Time)>), OracleError> {
    if jobs.len() > limit.min(32) {
        return Err(OracleError::TooLarge {
            jobs: jobs.len(),
            limit: limit.min(32),
        });
    }
    validate_stream(jobs)?;
    let mut s = Search {
        jobs,
        value: jobs.iter().map(value).collect(),
        memo: memoize.then(HashMap::new),
    };
    let (score, _) = s.best(f64::NEG_INFINITY, 0);
    let witness = s.witness();
    Ok((score, witness))
}

fn top_reward(jobs: &[Job]) -> Reward {
    jobs.iter().map(|j| j.reward).fold(f64::NEG_INFINITY, f64::max)
}

/// Largest total reward over all non-idling, non-preemptive schedules, with
/// the number of top-reward jobs maximized as a tie-break.
pub fn optimal_offline(jobs: &[Job]) -> Result<OracleResult, OracleError> {
    optimal_offline_with(jobs, DEFAULT_JOB_LIMIT, true)
}

/// [`optimal_offline`] with an explicit size limit and memoization switch.
pub fn optimal_offline_with(
    jobs: &[Job],
    limit: usize,
    memoize: bool,
) -> Result<OracleResult, OracleError> {
    let w_max = top_reward(jobs);
    let (score, witness) = solve(jobs, limit, memoize, |j| {
        Score(j.reward, u32::from(j.reward == w_max))
    })?;
    Ok(OracleResult {
        max_total_reward: score.0,
        max_topclass_count: score.1 as usize,
        witness,
    })
}

/// Most jobs with reward `w_max` any non-idling schedule can serve.
pub fn optimal_topclass_count(jobs: &[Job], w_max: Reward) -> Result<usize, OracleError> {
    let (score, _) = solve(jobs, DEFAULT_JOB_LIMIT, true, |j| {
        Score(f64::from(u8::from(j.reward == w_max)), 0)
    })?;
    Ok(score.0 as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(id: u64, t: f64, b: f64, d: f64, w: f64) -> Job {
        Job::new(id, t, b, d, w).unwrap()
    }

    #[test]
    fn empty_and_single() {
        let r = optimal_offline(&[]).unwrap();
        assert_eq!(r.max_total_reward, 0.0);
        assert!(r.witness.is_empty());
        let r = optimal_offline(&[job(1, 2.0, 1.0, 1.0, 5.0)]).unwrap();
        assert_eq!(r.max_total_reward, 5.0);
        assert_eq!(r.witness, vec![(JobId(1), 2.0)]);
    }

    #[test]
    fn no_idle_binds() {
        // J1 must start at 0; J2 (expiry 0.9) would have to wait until 1.
        let jobs = [job(1, 0.0, 1.0, 0.1, 4.0), job(2, 0.5, 1.0, 0.4, 10.0)];
        assert_eq!(optimal_offline(&jobs).unwrap().max_total_reward, 4.0);
    }

    #[test]
    fn fig2_pair_both_served() {
        let jobs = [
            job(1, 0.0, 1.0, 100.0, 1.0),
            job(2, 0.5, 30.0, 10.5, 3.0),
            job(3, 0.5, 5.0, 20.5, 7.0),
        ];
        let r = optimal_offline(&jobs).unwrap();
        assert_eq!(r.max_total_reward, 11.0);
        assert_eq!(r.witness, vec![(JobId(1), 0.0), (JobId(3), 1.0), (JobId(2), 6.0)]);
    }

    #[test]
    fn topclass_count() {
        let all_top: Vec<Job> = (0..4).map(|i| job(i + 1, i as f64 * 2.0, 1.0, 1.0, 10.0)).collect();
        assert_eq!(optimal_topclass_count(&all_top, 10.0).unwrap(), 4);

        // At t=1 the long top job (expiry 1.2) and a short filler are ready.
        // Starting the top job blocks the two top jobs arriving at 1.2 and
        // 1.3; starting the filler lets both through.
        let jobs = [
            job(1, 0.0, 1.0, 1.0, 4.0),
            job(2, 0.2, 3.0, 1.0, 10.0),
            job(3, 0.3, 0.5, 4.7, 4.0),
            job(4, 1.2, 1.0, 0.8, 10.0),
            job(5, 1.3, 1.0, 1.7, 10.0),
        ];
        assert_eq!(optimal_topclass_count(&jobs, 10.0).unwrap(), 2);
        let r = optimal_offline(&jobs).unwrap();
        assert_eq!((r.max_total_reward, r.max_topclass_count), (28.0, 2));
    }

    #[test]
    fn size_limit() {
        let jobs: Vec<Job> = (0..15).map(|i| job(i + 1, i as f64, 1.0, 1.0, 1.0)).collect();
        assert!(matches!(optimal_offline(&jobs), Err(OracleError::TooLarge { .. })));
        assert!(optimal_offline_with(&jobs, 15, true).is_ok());
    }

    #[test]
    fn memo_matches_plain_search() {
        let jobs: Vec<Job> = (0..8)
            .map(|i| job(i + 1, i as f64 * 0.4, 1.0 + (i % 3) as f64 * 0.5, 2.0, 1.0 + (i % 2) as f64 * 6.0))
            .collect();
        let a = optimal_offline_with(&jobs, 8, true).unwrap();
        let b = optimal_offline_with(&jobs, 8, false).unwrap();
        assert_eq!(a.max_total_reward, b.max_total_reward);
        assert_eq!(a.max_topclass_count, b.max_topclass_count);
    }
}
