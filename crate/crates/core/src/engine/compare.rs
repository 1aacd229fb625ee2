use std::collections::HashMap;

use thiserror::Error;

use super::SimulationTrace;
use crate::event::{EventKind, EventRecord};
use crate::job::{Reward, Time};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompareError {
    #[error("traces come from different job streams ({a:016x} vs {b:016x})")]
    DifferentStreams { a: u64, b: u64 },
}

/// Reward difference at one empty-queue epoch shared by both runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochDelta {
    /// Jobs arrived before the epoch.
    pub arrivals: usize,
    pub time_a: Time,
    pub time_b: Time,
    pub delta: Reward,
}

/// How run A relates to run B over their common epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub epochs: Vec<EpochDelta>,
    pub min_delta: Reward,
    pub mean_delta: Reward,
    pub final_delta: Reward,
    /// Least-squares slope of the delta against the epoch index.
    pub trend: f64,
    pub equivalent: bool,
    pub as_good_as: bool,
    /// Evidence only: a positive final delta with a positive trend.
    pub better: bool,
}

/// Compares two runs of the same stream at the epochs where both were
/// empty during the same gap between arrivals.
pub fn compare_traces(a: &SimulationTrace, b: &SimulationTrace) -> Result<Relation, CompareError> {
    if a.stream_checksum != b.stream_checksum {
        return Err(CompareError::DifferentStreams {
            a: a.stream_checksum,
            b: b.stream_checksum,
        });
    }
    let by_gap: HashMap<usize, _> = b.epochs.iter().map(|e| (e.arrivals, e)).collect();
    let epochs: Vec<EpochDelta> = a
        .epochs
        .iter()
        .filter_map(|ea| {
            by_gap.get(&ea.arrivals).map(|eb| EpochDelta {
                arrivals: ea.arrivals,
                time_a: ea.time,
                time_b: eb.time,
                delta: ea.reward - eb.reward,
            })
        })
        .collect();

    let deltas: Vec<f64> = epochs.iter().map(|e| e.delta).collect();
    let n = deltas.len() as f64;
    let min_delta = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_delta = if deltas.is_empty() { 0.0 } else { deltas.iter().sum::<f64>() / n };
    let final_delta = deltas.last().copied().unwrap_or(0.0);
    let trend = if deltas.len() < 2 {
        0.0
    } else {
        let xm = (n - 1.0) / 2.0;
        let (num, den) = deltas.iter().enumerate().fold((0.0, 0.0), |(num, den), (i, d)| {
            let dx = i as f64 - xm;
            (num + dx * (d - mean_delta), den + dx * dx)
        });
        num / den
    };
    Ok(Relation {
        min_delta: if deltas.is_empty() { 0.0 } else { min_delta },
        mean_delta,
        final_delta,
        trend,
        equivalent: deltas.iter().all(|&d| d == 0.0),
        as_good_as: deltas.iter().all(|&d| d >= 0.0),
        better: final_delta > 0.0 && trend > 0.0,
        epochs,
    })
}

/// The last record at each distinct time, with the number of services
/// begun up to and including it.
fn settled(events: &[EventRecord]) -> Vec<(&EventRecord, usize)> {
    let mut begun = 0;
    let mut out = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if e.kind == EventKind::ServiceBegin {
            begun += 1;
        }
        if events.get(i + 1).map_or(true, |next| next.time != e.time) {
            out.push((e, begun));
        }
    }
    out
}

/// Walks both traces over the union of their event times, calling `visit`
/// with the settled state of each after all events at that time.
fn walk(
    a: &SimulationTrace,
    b: &SimulationTrace,
    mut visit: impl FnMut(Time, (&EventRecord, usize), (&EventRecord, usize)) -> bool,
) {
    let sa = settled(&a.events);
    let sb = settled(&b.events);
    let (mut i, mut j) = (0, 0);
    while i < sa.len() || j < sb.len() {
        let t = match (sa.get(i), sb.get(j)) {
            (Some(x), Some(y)) => x.0.time.min(y.0.time),
            (Some(x), None) => x.0.time,
            (None, Some(y)) => y.0.time,
            (None, None) => unreachable!(),
        };
        if sa.get(i).is_some_and(|x| x.0.time == t) {
            i += 1;
        }
        if sb.get(j).is_some_and(|y| y.0.time == t) {
            j += 1;
        }
        if i == 0 || j == 0 {
            continue;
        }
        if !visit(t, sa[i - 1], sb[j - 1]) {
            return;
        }
    }
}

/// First time at which the two runs' queue potentials differ in size, with
/// both sizes. Needs full traces.
pub fn potential_sizes_agree(
    a: &SimulationTrace,
    b: &SimulationTrace,
) -> Result<(), (Time, usize, usize)> {
    let mut out = Ok(());
    walk(a, b, |t, (ea, _), (eb, _)| {
        if ea.queue_potential_size != eb.queue_potential_size {
            out = Err((t, ea.queue_potential_size, eb.queue_potential_size));
            return false;
        }
        true
    });
    out
}

pub fn service_begin_times(trace: &SimulationTrace) -> Vec<Time> {
    trace
        .events
        .iter()
        .filter(|e| e.kind == EventKind::ServiceBegin)
        .map(|e| e.time)
        .collect()
}

/// Checks that run A has started at least as many jobs as run B at every
/// time up to which A's queue potential has never been smaller than B's.
/// Returns the first time the started-count ordering fails while the premise
/// still holds. Meaningful for constant service times.
pub fn monotonicity_monitor(a: &SimulationTrace, b: &SimulationTrace) -> Result<(), Time> {
    let mut out = Ok(());
    walk(a, b, |t, (ea, na), (eb, nb)| {
        if ea.queue_potential_size < eb.queue_potential_size {
            return false;
        }
        if na < nb {
            out = Err(t);
            return false;
        }
        true
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_simulation;
    use crate::job::Job;
    use crate::policy::{HeadPolicy, Mud};

    fn job(id: u64, t: f64, b: f64, d: f64, w: f64) -> Job {
        Job::new(id, t, b, d, w).unwrap()
    }

    #[test]
    fn identical_policies_are_equivalent() {
        let jobs: Vec<Job> = (0..20)
            .map(|i| job(i + 1, i as f64 * 0.7, 1.0, 2.0, (i % 3) as f64 + 1.0))
            .collect();
        let a = run_simulation(&jobs, &mut HeadPolicy::edf()).unwrap();
        let b = run_simulation(&jobs, &mut HeadPolicy::edf()).unwrap();
        assert_eq!(a, b);
        let r = compare_traces(&a, &b).unwrap();
        assert!(r.equivalent && r.as_good_as && !r.better);
        assert!(!r.epochs.is_empty());
        assert_eq!(potential_sizes_agree(&a, &b), Ok(()));
        assert_eq!(monotonicity_monitor(&a, &b), Ok(()));
    }

    #[test]
    fn different_streams_rejected() {
        let a = run_simulation(&[job(1, 0.0, 1.0, 1.0, 1.0)], &mut HeadPolicy::edf()).unwrap();
        let b = run_simulation(&[job(1, 0.0, 1.0, 1.0, 2.0)], &mut HeadPolicy::edf()).unwrap();
        assert!(compare_traces(&a, &b).is_err());
    }

    #[test]
    fn mud_gains_on_a_displacement() {
        // Server busy until 2; J2 (w=4) and J3 (w=10) both expire at 2.5, so
        // only one can start. EDF keeps the earlier id, MUD the better ratio.
        let jobs = [
            job(1, 0.0, 2.0, 1.0, 1.0),
            job(2, 0.5, 1.0, 2.0, 4.0),
            job(3, 1.0, 1.0, 1.5, 10.0),
        ];
        let mud = run_simulation(&jobs, &mut Mud::new()).unwrap();
        let edf = run_simulation(&jobs, &mut HeadPolicy::edf()).unwrap();
        let r = compare_traces(&mud, &edf).unwrap();
        assert_eq!(r.final_delta, 6.0);
        assert!(r.as_good_as && !r.equivalent);
        assert_eq!(service_begin_times(&mud), service_begin_times(&edf));
        assert_eq!(potential_sizes_agree(&mud, &edf), Ok(()));
    }
}
