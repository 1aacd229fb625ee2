//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rdq_core::engine::{compare_traces, run_simulation, EngineError, Violation};
use rdq_core::experiment::{
    adversarial_bounds, adversarial_stream, one_sided_lower, run_study, run_suite,
    ExperimentError, ExperimentResult, StudyConfig, Suite, SuiteParams, SuiteReport,
    STUDY_POLICIES,
};
use rdq_core::job::{Job, JobId, Time};
use rdq_core::oracle::{optimal_offline_with, replay_witness};
use rdq_core::policy::{
    ArrivalDecision, HeadPolicy, Mud, OrderedQueue, Policy, PolicyError, PolicyKind, QueueOrder,
    ServeDecision,
};
use rdq_core::workload::{Study, LAMBDA_GRID};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Engine-contract failures seen anywhere, for criterion 7.
#[derive(Default)]
struct Contracts {
    runs: usize,
    violations: Vec<String>,
}

impl Contracts {
    fn absorb(&mut self, r: &SuiteReport) {
        self.runs += r.pass + r.fail + r.skip;
        self.violations.extend(
            r.failures
                .iter()
                .filter(|f| f.contains("engine:"))
                .cloned(),
        );
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn counts(r: &SuiteReport) -> String {
    let first = r.failures.first().map_or(String::new(), |f| format!("; first failure {f}"));
    format!("{} pass, {} fail, {} skip{first}", r.pass, r.fail, r.skip)
}

fn c1(log: &mut Contracts) -> Verdict {
    let (r, dt) = timed(|| run_suite(Suite::Lemma1, &SuiteParams::defaults(Suite::Lemma1)));
    log.absorb(&r);
    let fast = dt < Duration::from_secs(10);
    verdict(
        r.pass == 100 && fast,
        format!("{} in {:.1}s (limit 10s)", counts(&r), dt.as_secs_f64()),
    )
}

fn c2(log: &mut Contracts) -> Verdict {
    let r = run_suite(Suite::AsGood, &SuiteParams::defaults(Suite::AsGood));
    log.absorb(&r);
    verdict(r.ok() && r.pass == 100, format!("{}; {}", counts(&r), r.notes.join("; ")))
}

fn c3(log: &mut Contracts) -> Verdict {
    let jobs = adversarial_stream(50);
    let target = 50.0 * adversarial_bounds().delta_w.unwrap();
    let mud = run_simulation(&jobs, &mut Mud::new());
    let edf = run_simulation(&jobs, &mut HeadPolicy::edf());
    log.runs += 2;
    match (mud, edf) {
        (Ok(m), Ok(e)) => {
            let rel = compare_traces(&m, &e).unwrap();
            verdict(
                rel.final_delta == target && rel.as_good_as,
                format!(
                    "final dU = {} (want exactly {target}), min epoch dU = {}, {} epochs",
                    rel.final_delta,
                    rel.min_delta,
                    rel.epochs.len()
                ),
            )
        }
        (Err(err), _) | (_, Err(err)) => {
            log.violations.push(format!("adversarial: {err}"));
            verdict(false, format!("engine: {err}"))
        }
    }
}

fn oracle_criterion(suite: Suite, log: &mut Contracts, limit: Option<Duration>) -> Verdict {
    let (r, dt) = timed(|| run_suite(suite, &SuiteParams::defaults(suite)));
    log.absorb(&r);
    let fast = limit.map_or(true, |l| dt < l);
    let limit_note = limit.map_or(String::new(), |l| format!(" (limit {}s)", l.as_secs()));
    verdict(
        r.pass == 500 && fast,
        format!("{} of 500 in {:.1}s{limit_note}", counts(&r), dt.as_secs_f64()),
    )
}

fn c6(log: &mut Contracts, study: &mut Option<ExperimentResult>) -> Verdict {
    let cfg = StudyConfig::standard(Study::Mmb);
    let (res, dt) = timed(|| run_study(&cfg));
    log.runs += cfg.lambdas.len() * cfg.seeds * cfg.policies.len();
    let r = match res {
        Ok(r) => r,
        Err(e) => {
            if let ExperimentError::Engine { .. } = e {
                log.violations.push(e.to_string());
            }
            return verdict(false, e.to_string());
        }
    };
    let mut problems = Vec::new();
    let mut worst_gap = f64::INFINITY;
    let mut advantage = Vec::new();
    for &l in &LAMBDA_GRID {
        for &k in STUDY_POLICIES.iter().filter(|&&k| k != PolicyKind::Mud) {
            let d = r.paired(l, PolicyKind::Mud, k, |c| c.rel_reward);
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            worst_gap = worst_gap.min(mean);
            // Rejected only when MUD is significantly worse, one-sided at 95%.
            if one_sided_lower(&d.iter().map(|x| -x).collect::<Vec<_>>(), 0.95) > 0.0 {
                problems.push(format!("lambda_a={l}: MUD below {k} (mean gap {mean:.2e})"));
            }
        }
        let jobs: Vec<f64> = r.cells_for(l, PolicyKind::Mud).iter().map(|c| 1.0 - c.rel_jobs).collect();
        if one_sided_lower(&jobs, 0.95) > 0.0 {
            problems.push(format!("lambda_a={l}: MUD relative jobs below 1"));
        }
        advantage.push(r.cells_for(l, PolicyKind::Mud).iter().map(|c| c.rel_reward - 1.0).collect::<Vec<_>>());
    }
    for (k, pair) in advantage.windows(2).enumerate() {
        let drop: Vec<f64> = pair[0].iter().zip(&pair[1]).map(|(a, b)| a - b).collect();
        if one_sided_lower(&drop, 0.95) > 0.0 {
            problems.push(format!("advantage over EDF falls from lambda_a={} to {}", LAMBDA_GRID[k], LAMBDA_GRID[k + 1]));
        }
    }
    let means: Vec<String> = LAMBDA_GRID
        .iter()
        .map(|&l| {
            let a = r.aggregate(l, PolicyKind::Mud).unwrap();
            format!("{l}:{:.4}/{:.4}", a.rel_reward_mean, a.rel_jobs_mean)
        })
        .collect();
    let fast = dt < Duration::from_secs(300);
    let detail = format!(
        "MUD rel reward/jobs {}; smallest mean gap to a rival {worst_gap:.2e}; {:.1}s (limit 300s){}",
        means.join(" "),
        dt.as_secs_f64(),
        if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
    );
    *study = Some(r);
    verdict(problems.is_empty() && fast, detail)
}

/// Policies that break one contract each.
struct Faulty {
    queue: OrderedQueue,
    fault: Fault,
}

#[derive(Clone, Copy, Debug)]
enum Fault {
    Idle,
    ServeExpired,
    Phantom,
    Hoard,
}

impl Policy for Faulty {
    fn name(&self) -> &'static str {
        "faulty"
    }

    fn on_arrival(&mut self, job: Job, _now: Time, _busy: Time) -> Result<ArrivalDecision, PolicyError> {
        let position = self.queue.insert(job);
        Ok(ArrivalDecision::Accepted { position })
    }

    fn select(&mut self, now: Time) -> ServeDecision {
        match self.fault {
            Fault::Idle => ServeDecision::Idle,
            Fault::Phantom => ServeDecision::Serve(JobId(u64::MAX)),
            Fault::ServeExpired => match self.queue.front().copied() {
                Some(j) => {
                    self.queue.remove(j.id);
                    ServeDecision::Serve(j.id)
                }
                None => ServeDecision::Idle,
            },
            Fault::Hoard => match self.queue.front().copied() {
                // Reports a job as served but keeps it queued.
                Some(j) if !j.is_expired(now) => ServeDecision::Serve(j.id),
                _ => ServeDecision::Idle,
            },
        }
    }

    fn waiting(&self) -> Box<dyn Iterator<Item = &Job> + '_> {
        Box::new(self.queue.iter())
    }

    fn len(&self) -> usize {
        self.queue.len()
    }
}

fn c7(log: &mut Contracts, study: Option<&ExperimentResult>) -> Verdict {
    let bounds = run_suite(Suite::Bounds, &SuiteParams::defaults(Suite::Bounds));
    log.absorb(&bounds);
    let mut problems = log.violations.clone();
    if !bounds.ok() {
        problems.push(format!("bounds suite: {}", counts(&bounds)));
    }

    // Determinism: rerun part of the grid.
    if let Some(full) = study {
        let cfg = StudyConfig {
            lambdas: vec![LAMBDA_GRID[4]],
            seeds: 2,
            ..StudyConfig::standard(Study::Mmb)
        };
        match run_study(&cfg) {
            Ok(again) => {
                let want: Vec<_> = full.cells.iter().filter(|c| c.lambda_a == LAMBDA_GRID[4] && c.seed < 2).collect();
                let got: Vec<_> = again.cells.iter().collect();
                if want != got {
                    problems.push("rerun of the grid differs".into());
                }
            }
            Err(e) => problems.push(e.to_string()),
        }
    }

    // The checker must catch each injected fault.
    let jobs = [
        Job::new(1, 0.0, 2.0, 5.0, 4.0).unwrap(),
        Job::new(2, 0.5, 1.0, 0.5, 10.0).unwrap(),
        Job::new(3, 1.0, 1.0, 5.0, 4.0).unwrap(),
    ];
    for fault in [Fault::Idle, Fault::ServeExpired, Fault::Phantom, Fault::Hoard] {
        let mut p = Faulty {
            queue: OrderedQueue::new(QueueOrder::Edf),
            fault,
        };
        match run_simulation(&jobs, &mut p) {
            Err(EngineError::Contract { violation, .. }) => {
                let expected = match fault {
                    Fault::Idle => matches!(violation, Violation::ForcedIdle { .. }),
                    Fault::ServeExpired => matches!(violation, Violation::ServedExpired { .. }),
                    Fault::Phantom => matches!(violation, Violation::NotWaiting(_)),
                    Fault::Hoard => matches!(violation, Violation::Conservation { .. } | Violation::NotWaiting(_)),
                };
                if !expected {
                    problems.push(format!("{fault:?} reported as {violation:?}"));
                }
            }
            other => problems.push(format!("{fault:?} not caught: {:?}", other.map(|t| t.served))),
        }
    }
    verdict(
        problems.is_empty(),
        format!(
            "{} checked runs, {} violations, bounds suite {}, 4 injected faults{}",
            log.runs + bounds.pass + bounds.fail,
            log.violations.len(),
            counts(&bounds),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> Vec<Job> {
    let mut t = 0.0;
    (1..=n as u64)
        .map(|id| {
            t += rng.random_range(0.0..1.5);
            let b = [0.5, 1.0, 2.0][rng.random_range(0..3)];
            let d = rng.random_range(0.2..4.0);
            let w = [1.0, 4.0, 10.0][rng.random_range(0..3)];
            Job::new(id, t, b, d, w).unwrap()
        })
        .collect()
}

fn c8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut problems = Vec::new();
    for i in 0..100 {
        let jobs = random_instance(&mut rng, 8);
        let a = optimal_offline_with(&jobs, 8, true).unwrap();
        let b = optimal_offline_with(&jobs, 8, false).unwrap();
        if (a.max_total_reward, a.max_topclass_count) != (b.max_total_reward, b.max_topclass_count) {
            problems.push(format!("instance {i}: memo {a:?} vs plain {b:?}"));
        }
        for w in [&a.witness, &b.witness] {
            match replay_witness(&jobs, w) {
                Ok(t) if t.total_reward == a.max_total_reward => {}
                Ok(t) => problems.push(format!("instance {i}: replay earns {}", t.total_reward)),
                Err(e) => problems.push(format!("instance {i}: {e}")),
            }
        }
    }
    verdict(
        problems.is_empty(),
        format!(
            "100 instances of 8 jobs, 200 witness replays{}",
            problems.first().map_or(String::new(), |p| format!("; {} problems, first {p}", problems.len()))
        ),
    )
}

type Check = Box<dyn FnOnce(&mut Contracts, &mut Option<ExperimentResult>) -> Verdict>;

fn main() -> ExitCode {
    let mut log = Contracts::default();
    let mut study = None;
    let criteria: Vec<(&str, Check)> = vec![
        ("queue-potential sizes of MUD and EDF agree", Box::new(|l, _| c1(l))),
        ("MUD as good as EDF at every common epoch", Box::new(|l, _| c2(l))),
        ("adversarial stream gains exactly 50 * delta_W", Box::new(|l, _| c3(l))),
        ("two-reward oracle equivalence", Box::new(|l, _| oracle_criterion(Suite::T4, l, Some(Duration::from_secs(60))))),
        ("two-service oracle equivalence", Box::new(|l, _| oracle_criterion(Suite::T5, l, None))),
        ("dual-reward grid ordering", Box::new(c6)),
        ("engine contracts and determinism", Box::new(|l, s| c7(l, s.as_ref()))),
        ("oracle self-consistency", Box::new(|_, _| c8())),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.into_iter().enumerate() {
        let (v, dt) = timed(|| check(&mut log, &mut study));
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name} ({:.1}s): {}",
            if v.pass { "PASS" } else { "FAIL" },
            n + 1,
            dt.as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {} of 8 criteria pass", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
