//! Maximum utility with dropping.
//!
//! The queue is kept in expiry order (equal expiries by descending reward)
//! and always feasible: whenever an arrival makes some job miss its start,
//! one job is dropped, chosen by lowest reward-per-service among the jobs
//! ranked up to the first late one whose removal makes the queue feasible
//! again. At service time the second job may jump
//! the head when its ratio is strictly higher and the head can still start
//! after it.

use super::{ArrivalDecision, OrderedQueue, Policy, PolicyError, QueueOrder, ServeDecision};
use crate::job::{Job, Time};

/// Relative width of the band in which the fast slack test is re-checked by
/// an exact rescan.
const SLACK_TIE_BAND: f64 = 1e-9;

fn feasible_without(queue: &OrderedQueue, skip: usize, free_at: Time) -> bool {
    let mut start = free_at;
    for (k, j) in queue.iter().enumerate() {
        if k == skip {
            continue;
        }
        if j.expiry < start {
            return false;
        }
        start += j.service;
    }
    true
}

/// Inserts `job` into an expiry-ordered, feasible `queue` and restores
/// feasibility. `busy_until` is when the server frees.
///
/// Only jobs whose removal makes the whole queue feasible again are eligible
/// victims; the arriving job always is one, so the queue stays feasible and
/// an arrival changes its size by 0 or +1.
pub fn mud_on_arrival(
    queue: &mut OrderedQueue,
    job: Job,
    now: Time,
    busy_until: Time,
) -> ArrivalDecision {
    debug_assert_eq!(queue.order(), QueueOrder::EdfRewardDesc);
    let position = queue.insert(job);
    let free_at = busy_until.max(now);
    let Some(first_late) = queue.first_infeasible(free_at) else {
        return ArrivalDecision::Accepted { position };
    };

    let n = queue.len();
    let mut slack = Vec::with_capacity(n);
    let mut start = free_at;
    for j in queue.iter() {
        slack.push(j.expiry - start);
        start += j.service;
    }
    let scale = start.abs().max(1.0);
    // min slack over ranks >= k
    let mut suffix_min = vec![f64::INFINITY; n + 1];
    for k in (0..n).rev() {
        suffix_min[k] = suffix_min[k + 1].min(slack[k]);
    }

    let mut victim: Option<(usize, f64)> = None;
    for (idx, j) in queue.iter().enumerate().take(first_late + 1) {
        // Removing idx pulls every later start forward by its service time.
        let margin = suffix_min[idx + 1] + j.service;
        let restores = if margin.abs() <= SLACK_TIE_BAND * scale {
            feasible_without(queue, idx, free_at)
        } else {
            margin >= 0.0
        };
        if !restores {
            continue;
        }
        // Strict comparison keeps the earliest-expiry job among equal ratios.
        let ratio = j.ratio();
        if victim.map_or(true, |(_, best)| ratio < best) {
            victim = Some((idx, ratio));
        }
    }
    let (idx, _) = victim.expect("the arriving job is always an eligible victim");
    let dropped = queue.remove_at(idx).expect("victim index in range");
    if dropped.id == job.id {
        ArrivalDecision::Rejected
    } else {
        ArrivalDecision::AcceptedWithDrop { dropped: dropped.id }
    }
}

/// Service step: drop an expired head; otherwise serve the second job when
/// the head can still start after it and its ratio is strictly higher;
/// otherwise serve the head.
pub fn mud_select(queue: &OrderedQueue, now: Time) -> ServeDecision {
    let Some(head) = queue.front() else {
        return ServeDecision::Idle;
    };
    if head.is_expired(now) {
        return ServeDecision::Drop(head.id);
    }
    if let Some(second) = queue.get(1) {
        if head.expiry >= now + second.service && head.ratio() < second.ratio() {
            return ServeDecision::Serve(second.id);
        }
    }
    ServeDecision::Serve(head.id)
}

#[derive(Debug, Clone)]
pub struct Mud {
    queue: OrderedQueue,
}

impl Mud {
    pub fn new() -> Self {
        Self {
            queue: OrderedQueue::new(QueueOrder::EdfRewardDesc),
        }
    }

    pub fn queue(&self) -> &OrderedQueue {
        &self.queue
    }
}

impl Default for Mud {
    fn default() -> Self {
        Self::new()
    }
}

impl Policy for Mud {
    fn name(&self) -> &'static str {
        "mud"
    }

    fn on_arrival(
        &mut self,
        job: Job,
        now: Time,
        busy_until: Time,
    ) -> Result<ArrivalDecision, PolicyError> {
        Ok(mud_on_arrival(&mut self.queue, job, now, busy_until))
    }

    fn select(&mut self, now: Time) -> ServeDecision {
        let decision = mud_select(&self.queue, now);
        if let ServeDecision::Serve(id) | ServeDecision::Drop(id) = decision {
            self.queue.remove(id);
        }
        decision
    }

    fn waiting(&self) -> Box<dyn Iterator<Item = &Job> + '_> {
        Box::new(self.queue.iter())
    }

    fn len(&self) -> usize {
        self.queue.len()
    }
}
