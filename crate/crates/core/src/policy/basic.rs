use super::{ArrivalDecision, OrderedQueue, Policy, PolicyError, QueueOrder, ServeDecision};
use crate::job::{Job, Time};

/// Serve the head if it can still start on time, otherwise drop it.
fn head_select(queue: &OrderedQueue, now: Time) -> ServeDecision {
    match queue.front() {
        None => ServeDecision::Idle,
        Some(j) if j.is_expired(now) => ServeDecision::Drop(j.id),
        Some(j) => ServeDecision::Serve(j.id),
    }
}

/// Earliest deadline first. `queue` must be in [`QueueOrder::Edf`].
pub fn edf_select(queue: &OrderedQueue, now: Time) -> ServeDecision {
    debug_assert_eq!(queue.order(), QueueOrder::Edf);
    head_select(queue, now)
}

/// EDF, except the second job is served first when that still lets the head
/// start on time and the head-first order would make the second job late.
/// `queue` must be in [`QueueOrder::Edf`].
pub fn medf_select(queue: &OrderedQueue, now: Time) -> ServeDecision {
    debug_assert_eq!(queue.order(), QueueOrder::Edf);
    let Some(head) = queue.front() else {
        return ServeDecision::Idle;
    };
    if head.is_expired(now) {
        return ServeDecision::Drop(head.id);
    }
    if let Some(second) = queue.get(1) {
        if head.expiry >= now + second.service && second.expiry < now + head.service {
            return ServeDecision::Serve(second.id);
        }
    }
    ServeDecision::Serve(head.id)
}

/// Highest reward first; ties by earliest expiry, then id.
/// `queue` must be in [`QueueOrder::RewardDesc`].
pub fn greedy_select(queue: &OrderedQueue, now: Time) -> ServeDecision {
    debug_assert_eq!(queue.order(), QueueOrder::RewardDesc);
    head_select(queue, now)
}

/// Lowest id first. `queue` must be in [`QueueOrder::Fcfs`].
pub fn fcfs_select(queue: &OrderedQueue, now: Time) -> ServeDecision {
    debug_assert_eq!(queue.order(), QueueOrder::Fcfs);
    head_select(queue, now)
}

/// Single-queue policy that inserts in a fixed order and picks by a select
/// function.
#[derive(Debug, Clone)]
pub struct HeadPolicy {
    name: &'static str,
    queue: OrderedQueue,
    select: fn(&OrderedQueue, Time) -> ServeDecision,
}

impl HeadPolicy {
    pub fn edf() -> Self {
        Self::with("edf", QueueOrder::Edf, edf_select)
    }

    pub fn medf() -> Self {
        Self::with("medf", QueueOrder::Edf, medf_select)
    }

    pub fn greedy() -> Self {
        Self::with("greedy", QueueOrder::RewardDesc, greedy_select)
    }

    pub fn fcfs() -> Self {
        Self::with("fcfs", QueueOrder::Fcfs, fcfs_select)
    }

    fn with(
        name: &'static str,
        order: QueueOrder,
        select: fn(&OrderedQueue, Time) -> ServeDecision,
    ) -> Self {
        Self {
            name,
            queue: OrderedQueue::new(order),
            select,
        }
    }

    pub fn queue(&self) -> &OrderedQueue {
        &self.queue
    }
}

impl Policy for HeadPolicy {
    fn name(&self) -> &'static str {
        self.name
    }

    fn on_arrival(
        &mut self,
        job: Job,
        _now: Time,
        _busy_until: Time,
    ) -> Result<ArrivalDecision, PolicyError> {
        let position = self.queue.insert(job);
        Ok(ArrivalDecision::Accepted { position })
    }

    fn select(&mut self, now: Time) -> ServeDecision {
        let decision = (self.select)(&self.queue, now);
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
