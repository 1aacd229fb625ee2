//! Event records and the queue-event classifier (classes QE1..QE7).

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::job::{JobId, Reward, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrival,
    ServiceBegin,
    ServiceComplete,
    Drop,
    ExpiryPassed,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Arrival => "arrival",
            EventKind::ServiceBegin => "service_begin",
            EventKind::ServiceComplete => "service_complete",
            EventKind::Drop => "drop",
            EventKind::ExpiryPassed => "expiry_passed",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Queue-event classes.
///
/// * `Qe1`: arrival to an idle server with an empty queue, served at once.
/// * `Qe2`: arrival while busy, when the potential change is unknown.
/// * `Qe3`: arrival while busy that grows the queue potential by one.
/// * `Qe4`: arrival while busy that leaves the potential size unchanged
///   (the new job is excluded or another job is displaced).
/// * `Qe5`: service begins.
/// * `Qe6`: a waiting job's deadline has passed.
/// * `Qe7`: a job is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QeClass {
    Qe1,
    Qe2,
    Qe3,
    Qe4,
    Qe5,
    Qe6,
    Qe7,
}

impl QeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            QeClass::Qe1 => "QE1",
            QeClass::Qe2 => "QE2",
            QeClass::Qe3 => "QE3",
            QeClass::Qe4 => "QE4",
            QeClass::Qe5 => "QE5",
            QeClass::Qe6 => "QE6",
            QeClass::Qe7 => "QE7",
        }
    }
}

impl fmt::Display for QeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for QeClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// One line of a simulation trace. `queue_potential_size` and
/// `cumulative_reward` describe the state after the event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub time: Time,
    pub kind: EventKind,
    pub job_id: JobId,
    pub qe_class: Option<QeClass>,
    pub queue_potential_size: usize,
    pub cumulative_reward: Reward,
}

/// The parts of the engine state the classifier looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueueSnapshot {
    pub server_busy: bool,
    pub waiting: usize,
    /// Queue-potential size, when it was computed.
    pub potential: Option<usize>,
}

/// Whether every job in the run has the same service time. Under constant
/// service an arrival can never shrink the queue potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceRegime {
    Deterministic,
    General,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("arrival shrank the queue potential ({before} -> {after}) under constant service")]
    PotentialShrank { before: usize, after: usize },
    #[error("inconsistent state pair around {kind}: {reason}")]
    Inconsistent { kind: EventKind, reason: String },
}

fn inconsistent(kind: EventKind, reason: impl Into<String>) -> ClassifyError {
    ClassifyError::Inconsistent {
        kind,
        reason: reason.into(),
    }
}

/// Classifies an event from the engine states immediately before and after it.
pub fn classify_event(
    before: &QueueSnapshot,
    kind: EventKind,
    after: &QueueSnapshot,
    regime: ServiceRegime,
) -> Result<Option<QeClass>, ClassifyError> {
    match kind {
        EventKind::Arrival => {
            if !before.server_busy {
                if before.waiting != 0 {
                    return Err(inconsistent(kind, "idle server with a non-empty queue"));
                }
                if !after.server_busy {
                    return Err(inconsistent(kind, "arrival to idle server was not served"));
                }
                return Ok(Some(QeClass::Qe1));
            }
            let (Some(b), Some(a)) = (before.potential, after.potential) else {
                return Ok(Some(QeClass::Qe2));
            };
            match a as i64 - b as i64 {
                1 => Ok(Some(QeClass::Qe3)),
                0 => Ok(Some(QeClass::Qe4)),
                d if d < 0 => match regime {
                    ServiceRegime::Deterministic => {
                        Err(ClassifyError::PotentialShrank { before: b, after: a })
                    }
                    // With mixed service times one long arrival can push
                    // several jobs out; the potential still did not grow.
                    ServiceRegime::General => Ok(Some(QeClass::Qe4)),
                },
                // A short arrival can push out one long job and free room for
                // several later ones.
                _ if regime == ServiceRegime::General => Ok(Some(QeClass::Qe3)),
                d => Err(inconsistent(kind, format!("potential grew by {d}"))),
            }
        }
        EventKind::ServiceBegin => {
            if !after.server_busy {
                return Err(inconsistent(kind, "server idle after service began"));
            }
            Ok(Some(QeClass::Qe5))
        }
        EventKind::ExpiryPassed => Ok(Some(QeClass::Qe6)),
        EventKind::Drop => Ok(Some(QeClass::Qe7)),
        EventKind::ServiceComplete => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(busy: bool, waiting: usize, potential: usize) -> QueueSnapshot {
        QueueSnapshot {
            server_busy: busy,
            waiting,
            potential: Some(potential),
        }
    }

    const DET: ServiceRegime = ServiceRegime::Deterministic;

    #[test]
    fn arrival_to_idle_is_qe1() {
        let c = classify_event(&snap(false, 0, 0), EventKind::Arrival, &snap(true, 0, 0), DET);
        assert_eq!(c, Ok(Some(QeClass::Qe1)));
    }

    #[test]
    fn arrival_while_busy_growing_is_qe3() {
        let c = classify_event(&snap(true, 2, 2), EventKind::Arrival, &snap(true, 3, 3), DET);
        assert_eq!(c, Ok(Some(QeClass::Qe3)));
    }

    #[test]
    fn arrival_with_displacement_is_qe4() {
        let c = classify_event(&snap(true, 2, 2), EventKind::Arrival, &snap(true, 2, 2), DET);
        assert_eq!(c, Ok(Some(QeClass::Qe4)));
    }

    #[test]
    fn unknown_potential_reports_union_tag() {
        let before = QueueSnapshot {
            server_busy: true,
            waiting: 1,
            potential: None,
        };
        let c = classify_event(&before, EventKind::Arrival, &snap(true, 2, 2), DET);
        assert_eq!(c, Ok(Some(QeClass::Qe2)));
    }

    #[test]
    fn shrinking_arrival_depends_on_regime() {
        let before = snap(true, 3, 3);
        let after = snap(true, 4, 2);
        assert!(matches!(
            classify_event(&before, EventKind::Arrival, &after, DET),
            Err(ClassifyError::PotentialShrank { .. })
        ));
        assert_eq!(
            classify_event(&before, EventKind::Arrival, &after, ServiceRegime::General),
            Ok(Some(QeClass::Qe4))
        );
    }

    #[test]
    fn growth_by_two_needs_mixed_service() {
        let (before, after) = (snap(true, 3, 1), snap(true, 4, 3));
        assert!(classify_event(&before, EventKind::Arrival, &after, DET).is_err());
        assert_eq!(
            classify_event(&before, EventKind::Arrival, &after, ServiceRegime::General),
            Ok(Some(QeClass::Qe3))
        );
    }

    #[test]
    fn inconsistent_pairs_are_rejected() {
        assert!(classify_event(&snap(false, 2, 2), EventKind::Arrival, &snap(true, 2, 2), DET).is_err());
        assert!(classify_event(&snap(true, 1, 1), EventKind::Arrival, &snap(true, 3, 3), DET).is_err());
        assert!(classify_event(&snap(false, 0, 0), EventKind::ServiceBegin, &snap(false, 0, 0), DET).is_err());
    }

    #[test]
    fn other_kinds() {
        let s = snap(true, 1, 1);
        assert_eq!(classify_event(&s, EventKind::ServiceBegin, &s, DET), Ok(Some(QeClass::Qe5)));
        assert_eq!(classify_event(&s, EventKind::ExpiryPassed, &s, DET), Ok(Some(QeClass::Qe6)));
        assert_eq!(classify_event(&s, EventKind::Drop, &s, DET), Ok(Some(QeClass::Qe7)));
        assert_eq!(classify_event(&s, EventKind::ServiceComplete, &s, DET), Ok(None));
    }
}
