//! The cμ/θ rule: one queue per reward class, serve the non-empty class with
//! the largest `c * mu / theta`. Within a class the order is FCFS, or EDF for
//! the deadline-aware variant.

use super::{ArrivalDecision, OrderedQueue, Policy, PolicyError, QueueOrder, ServeDecision};
use crate::job::{Job, Reward, Time};
use crate::workload::{DistSpec, ScenarioSpec};

/// Holding-cost coefficient, service rate and abandonment rate of a class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassCoeff {
    pub c: f64,
    pub mu: f64,
    pub theta: f64,
}

impl ClassCoeff {
    pub fn index(&self) -> f64 {
        self.c * self.mu / self.theta
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ClassKey {
    /// One class per distinct reward value (sorted ascending).
    Exact(Vec<Reward>),
    /// Upper edges of all but the last class (sorted ascending).
    Buckets(Vec<Reward>),
}

/// Mapping from rewards to classes plus per-class coefficients. Classes are
/// numbered in ascending reward order.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardClasses {
    key: ClassKey,
    coeffs: Vec<ClassCoeff>,
    /// Class indices from highest to lowest priority.
    priority: Vec<usize>,
}

fn priority_order(coeffs: &[ClassCoeff]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..coeffs.len()).collect();
    order.sort_by(|&a, &b| {
        coeffs[b]
            .index()
            .total_cmp(&coeffs[a].index())
            .then_with(|| coeffs[b].c.total_cmp(&coeffs[a].c))
            .then_with(|| a.cmp(&b))
    });
    order
}

impl RewardClasses {
    /// One class per reward value, with `c` equal to the reward.
    pub fn discrete(values: &[Reward], mu: f64, theta: f64) -> Self {
        let mut values = values.to_vec();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let coeffs: Vec<ClassCoeff> = values.iter().map(|&c| ClassCoeff { c, mu, theta }).collect();
        Self {
            priority: priority_order(&coeffs),
            key: ClassKey::Exact(values),
            coeffs,
        }
    }

    /// `k` equal-probability buckets of an exponential reward with rate
    /// `rate`; each class's `c` is the conditional mean reward in its bucket.
    pub fn exponential_buckets(rate: f64, k: usize, mu: f64, theta: f64) -> Self {
        let k = k.max(1);
        let edge = |j: usize| -(1.0 - j as f64 / k as f64).ln() / rate;
        let edges: Vec<f64> = (1..k).map(edge).collect();
        let mean = 1.0 / rate;
        let coeffs = (0..k)
            .map(|j| {
                let lo = edge(j);
                let c = if j + 1 == k {
                    lo + mean
                } else {
                    // E[X | lo <= X < hi] for an exponential.
                    let width = edge(j + 1) - lo;
                    let tail = (-rate * width).exp();
                    lo + mean - width * tail / (1.0 - tail)
                };
                ClassCoeff { c, mu, theta }
            })
            .collect::<Vec<_>>();
        Self {
            priority: priority_order(&coeffs),
            key: ClassKey::Buckets(edges),
            coeffs,
        }
    }

    /// Classes for a scenario: exact classes for finite-support rewards,
    /// equal-mass buckets for exponential ones. `mu` and `theta` are the
    /// reciprocal mean service time and mean deadline.
    pub fn for_scenario(spec: &ScenarioSpec) -> Self {
        let mu = 1.0 / spec.service.mean();
        let theta = 1.0 / spec.deadline.mean();
        match (&spec.reward, spec.reward.support()) {
            (_, Some(values)) => Self::discrete(&values, mu, theta),
            (DistSpec::Exponential { rate }, None) => {
                Self::exponential_buckets(*rate, spec.reward_classes, mu, theta)
            }
            (other, None) => unreachable!("continuous reward {other:?} has no class mapping"),
        }
    }

    /// Exact classes over the rewards realized in `jobs`, with rates from
    /// the realized mean service time and deadline.
    pub fn from_jobs(jobs: &[Job]) -> Self {
        if jobs.is_empty() {
            return Self::discrete(&[], 1.0, 1.0);
        }
        let n = jobs.len() as f64;
        let mean_b = jobs.iter().map(|j| j.service).sum::<f64>() / n;
        let mean_d = jobs.iter().map(|j| j.deadline).sum::<f64>() / n;
        let rewards: Vec<f64> = jobs.iter().map(|j| j.reward).collect();
        Self::discrete(&rewards, 1.0 / mean_b, 1.0 / mean_d)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[ClassCoeff] {
        &self.coeffs
    }

    pub fn priority(&self) -> &[usize] {
        &self.priority
    }

    pub fn class_of(&self, reward: Reward) -> Option<usize> {
        match &self.key {
            ClassKey::Exact(values) => values.iter().position(|&v| v == reward),
            ClassKey::Buckets(edges) => {
                if self.coeffs.is_empty() {
                    None
                } else {
                    Some(edges.partition_point(|&e| e <= reward))
                }
            }
        }
    }
}

/// Picks from per-class queues: the highest-priority non-empty class; its
/// head is dropped if expired, otherwise served. Returns the class index
/// along with the decision.
pub fn cmu_theta_select(
    class_queues: &[OrderedQueue],
    classes: &RewardClasses,
    now: Time,
) -> Result<(Option<usize>, ServeDecision), PolicyError> {
    if let Some(extra) = class_queues.iter().skip(classes.len()).find_map(|q| q.front()) {
        return Err(PolicyError::NoClass {
            job: extra.id,
            reward: extra.reward,
        });
    }
    for &k in classes.priority() {
        let Some(head) = class_queues.get(k).and_then(|q| q.front()) else {
            continue;
        };
        let decision = if head.is_expired(now) {
            ServeDecision::Drop(head.id)
        } else {
            ServeDecision::Serve(head.id)
        };
        return Ok((Some(k), decision));
    }
    Ok((None, ServeDecision::Idle))
}

#[derive(Debug, Clone)]
pub struct CmuTheta {
    classes: RewardClasses,
    queues: Vec<OrderedQueue>,
    name: &'static str,
    len: usize,
}

impl CmuTheta {
    /// `intra` is [`QueueOrder::Fcfs`] for the classic rule or
    /// [`QueueOrder::Edf`] for the deadline-aware variant.
    pub fn new(classes: RewardClasses, intra: QueueOrder) -> Self {
        let name = match intra {
            QueueOrder::Edf => "cmutheta_edf",
            _ => "cmutheta",
        };
        Self {
            queues: (0..classes.len()).map(|_| OrderedQueue::new(intra)).collect(),
            classes,
            name,
            len: 0,
        }
    }
}

impl Policy for CmuTheta {
    fn name(&self) -> &'static str {
        self.name
    }

    fn on_arrival(
        &mut self,
        job: Job,
        _now: Time,
        _busy_until: Time,
    ) -> Result<ArrivalDecision, PolicyError> {
        let k = self.classes.class_of(job.reward).ok_or(PolicyError::NoClass {
            job: job.id,
            reward: job.reward,
        })?;
        let within = self.queues[k].insert(job);
        let ahead: usize = self.classes.priority()
            .iter()
            .take_while(|&&c| c != k)
            .map(|&c| self.queues[c].len())
            .sum();
        self.len += 1;
        Ok(ArrivalDecision::Accepted {
            position: ahead + within,
        })
    }

    fn select(&mut self, now: Time) -> ServeDecision {
        let (class, decision) = cmu_theta_select(&self.queues, &self.classes, now)
            .expect("queues are built from the class table");
        if let (Some(k), ServeDecision::Serve(_) | ServeDecision::Drop(_)) = (class, decision) {
            self.queues[k].remove_at(0);
            self.len -= 1;
        }
        decision
    }

    fn waiting(&self) -> Box<dyn Iterator<Item = &Job> + '_> {
        Box::new(
            self.classes
                .priority()
                .iter()
                .flat_map(move |&k| self.queues[k].iter()),
        )
    }

    fn len(&self) -> usize {
        self.len
    }
}
