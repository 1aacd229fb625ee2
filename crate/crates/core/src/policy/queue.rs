use std::cmp::Ordering;
use std::collections::VecDeque;

use crate::job::{Job, JobId, Time};

/// Sort order of an [`OrderedQueue`]. Every order ends with the job id, so
/// it is total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueueOrder {
    /// Expiry ascending.
    Edf,
    /// Expiry ascending, equal expiries by reward descending.
    EdfRewardDesc,
    /// Arrival (id) order.
    Fcfs,
    /// Reward descending, then expiry ascending.
    RewardDesc,
}

impl QueueOrder {
    pub fn compare(self, a: &Job, b: &Job) -> Ordering {
        let primary = match self {
            QueueOrder::Edf => a.expiry.total_cmp(&b.expiry),
            QueueOrder::EdfRewardDesc => a
                .expiry
                .total_cmp(&b.expiry)
                .then_with(|| b.reward.total_cmp(&a.reward)),
            QueueOrder::Fcfs => Ordering::Equal,
            QueueOrder::RewardDesc => b
                .reward
                .total_cmp(&a.reward)
                .then_with(|| a.expiry.total_cmp(&b.expiry)),
        };
        primary.then_with(|| a.id.cmp(&b.id))
    }
}

/// Waiting jobs kept sorted by a [`QueueOrder`].
#[derive(Debug, Clone)]
pub struct OrderedQueue {
    order: QueueOrder,
    jobs: VecDeque<Job>,
}

impl OrderedQueue {
    pub fn new(order: QueueOrder) -> Self {
        Self {
            order,
            jobs: VecDeque::new(),
        }
    }

    pub fn from_jobs(order: QueueOrder, jobs: impl IntoIterator<Item = Job>) -> Self {
        let mut q = Self::new(order);
        for j in jobs {
            q.insert(j);
        }
        q
    }

    pub fn order(&self) -> QueueOrder {
        self.order
    }

    /// Inserts `job` in order and returns its 0-based position.
    pub fn insert(&mut self, job: Job) -> usize {
        let order = self.order;
        let pos = self
            .jobs
            .partition_point(|x| order.compare(x, &job) == Ordering::Less);
        self.jobs.insert(pos, job);
        pos
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn get(&self, idx: usize) -> Option<&Job> {
        self.jobs.get(idx)
    }

    pub fn front(&self) -> Option<&Job> {
        self.jobs.front()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &Job> + '_ {
        self.jobs.iter()
    }

    pub fn position(&self, id: JobId) -> Option<usize> {
        self.jobs.iter().position(|j| j.id == id)
    }

    pub fn remove_at(&mut self, idx: usize) -> Option<Job> {
        self.jobs.remove(idx)
    }

    pub fn remove(&mut self, id: JobId) -> Option<Job> {
        let idx = self.position(id)?;
        self.jobs.remove(idx)
    }

    /// Rank of the first job that would begin service after its expiry if
    /// the queue were served in order from `free_at`.
    pub fn first_infeasible(&self, free_at: Time) -> Option<usize> {
        let mut start = free_at;
        for (k, j) in self.jobs.iter().enumerate() {
            if j.expiry < start {
                return Some(k);
            }
            start += j.service;
        }
        None
    }

    /// Whether serving in order from `free_at` starts every job on time.
    pub fn is_feasible(&self, free_at: Time) -> bool {
        self.first_infeasible(free_at).is_none()
    }
}

/// Position of a job in the service order: `rank` is 1-based, `wait` is the
/// summed service time of every job ranked ahead of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueOffset {
    pub id: JobId,
    pub rank: usize,
    pub wait: Time,
}

/// Ranks and prefix service sums for every queued job, in queue order.
pub fn queue_offsets(queue: &OrderedQueue) -> Vec<QueueOffset> {
    let mut wait = 0.0;
    queue
        .iter()
        .enumerate()
        .map(|(k, j)| {
            let off = QueueOffset {
                id: j.id,
                rank: k + 1,
                wait,
            };
            wait += j.service;
            off
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn job(id: u64, b: f64, e: f64, w: f64) -> Job {
        Job::new(id, 0.0, b, e, w).unwrap()
    }

    #[test]
    fn offsets() {
        assert!(queue_offsets(&OrderedQueue::new(QueueOrder::Edf)).is_empty());
        let single = OrderedQueue::from_jobs(QueueOrder::Edf, [job(1, 4.0, 1.0, 1.0)]);
        assert_eq!(
            queue_offsets(&single),
            vec![QueueOffset { id: JobId(1), rank: 1, wait: 0.0 }]
        );
        let q = OrderedQueue::from_jobs(
            QueueOrder::Edf,
            [job(1, 2.0, 1.0, 1.0), job(2, 3.0, 2.0, 1.0), job(3, 5.0, 3.0, 1.0)],
        );
        let waits: Vec<f64> = queue_offsets(&q).iter().map(|o| o.wait).collect();
        assert_eq!(waits, vec![0.0, 2.0, 5.0]);
    }

    #[test]
    fn equal_expiry_ordered_by_reward() {
        let q = OrderedQueue::from_jobs(
            QueueOrder::EdfRewardDesc,
            [job(1, 1.0, 5.0, 4.0), job(2, 1.0, 5.0, 10.0), job(3, 1.0, 3.0, 1.0)],
        );
        let ids: Vec<u64> = q.iter().map(|j| j.id.0).collect();
        assert_eq!(ids, vec![3, 2, 1]);
    }

    #[test]
    fn first_infeasible_scan() {
        let q = OrderedQueue::from_jobs(
            QueueOrder::Edf,
            [job(1, 1.0, 2.0, 1.0), job(2, 1.0, 2.5, 1.0), job(3, 1.0, 2.8, 1.0)],
        );
        // starts 1, 2, 3: the third job misses 2.8
        assert_eq!(q.first_infeasible(1.0), Some(2));
        assert!(q.is_feasible(0.5));
    }

    proptest! {
        #[test]
        fn offsets_are_prefix_sums(bs in proptest::collection::vec(0.1f64..10.0, 0..30)) {
            let q = OrderedQueue::from_jobs(
                QueueOrder::Fcfs,
                bs.iter().enumerate().map(|(i, b)| job(i as u64 + 1, *b, 100.0, 1.0)),
            );
            let offs = queue_offsets(&q);
            for (k, off) in offs.iter().enumerate() {
                let brute: f64 = bs[..k].iter().sum();
                prop_assert_eq!(off.rank, k + 1);
                prop_assert!((off.wait - brute).abs() <= 1e-9 * (1.0 + brute));
            }
        }

        /// Exchanging the two head jobs leaves the wait of every later rank
        /// unchanged.
        #[test]
        fn head_swap_keeps_later_waits(bs in proptest::collection::vec(1u32..5, 3..20)) {
            let jobs: Vec<Job> = bs.iter().enumerate()
                .map(|(i, b)| job(i as u64 + 1, *b as f64, 100.0 + i as f64, 1.0))
                .collect();
            let q = OrderedQueue::from_jobs(QueueOrder::Fcfs, jobs.clone());
            let mut swapped_jobs = jobs.clone();
            swapped_jobs.swap(0, 1);
            let a = queue_offsets(&q);
            let mut wait = 0.0;
            for (k, j) in swapped_jobs.iter().enumerate() {
                if k >= 2 {
                    prop_assert_eq!(a[k].wait, wait);
                }
                wait += j.service;
            }
        }
    }
}
