use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{compare_traces, run_simulation, SimulationTrace};
use crate::job::{Job, ScenarioBounds};
use crate::oracle::{verify_lemma1, verify_theorem4, verify_theorem5, Outcome};
use crate::policy::{HeadPolicy, Mud, PolicyKind, RewardClasses};
use crate::workload::{
    adversarial_mud_stream, generate_stream, DistSpec, ScenarioSpec, DUAL_REWARDS, LAMBDA_DEADLINE,
    LAMBDA_GRID,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemma1,
    AsGood,
    Better,
    T4,
    T5,
    Bounds,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Lemma1,
        Suite::AsGood,
        Suite::Better,
        Suite::T4,
        Suite::T5,
        Suite::Bounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::AsGood => "asgood",
            Suite::Better => "better",
            Suite::T4 => "t4",
            Suite::T5 => "t5",
            Suite::Bounds => "bounds",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|k| k.name()).collect();
            format!("unknown suite `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteParams {
    /// Streams or instances to draw.
    pub runs: usize,
    /// Jobs per stream or instance.
    pub jobs: usize,
    /// Repeats of the adversarial pattern.
    pub repeats: usize,
    pub seed: u64,
}

impl SuiteParams {
    pub fn defaults(suite: Suite) -> Self {
        let (runs, jobs) = match suite {
            Suite::Lemma1 | Suite::AsGood => (100, 1000),
            Suite::Better => (1, 0),
            Suite::T4 | Suite::T5 => (500, 10),
            Suite::Bounds => (20, 2000),
        };
        Self {
            runs,
            jobs,
            repeats: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub pass: usize,
    pub fail: usize,
    pub skip: usize,
    /// The first few failure messages.
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

const KEPT_FAILURES: usize = 10;

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        Self {
            suite,
            pass: 0,
            fail: 0,
            skip: 0,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn add(&mut self, label: impl fmt::Display, outcome: Outcome) {
        match outcome {
            Outcome::Pass => self.pass += 1,
            Outcome::Skip(_) => self.skip += 1,
            Outcome::Fail(why) => {
                self.fail += 1;
                if self.failures.len() < KEPT_FAILURES {
                    self.failures.push(format!("{label}: {why}"));
                }
            }
        }
    }

    pub fn ok(&self) -> bool {
        self.fail == 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {} pass, {} fail, {} skip",
            self.suite, self.pass, self.fail, self.skip
        )?;
        for n in &self.notes {
            writeln!(f, "  {n}")?;
        }
        for m in &self.failures {
            writeln!(f, "  FAIL {m}")?;
        }
        Ok(())
    }
}

fn grid_rate(i: usize) -> f64 {
    LAMBDA_GRID[i % LAMBDA_GRID.len()]
}

fn dual_rewards() -> DistSpec {
    let (lo, hi, p_hi) = DUAL_REWARDS;
    DistSpec::TwoPoint { lo, hi, p_hi }
}

/// Stream `i` of the constant-service suites: unit service, exponential
/// arrivals cycling through the study rates, exponential deadlines at
/// the study rate, rewards 4 or 10.
pub fn lemma1_spec(i: usize, jobs: usize, seed: u64) -> ScenarioSpec {
    ScenarioSpec::new(
        DistSpec::Exponential { rate: grid_rate(i) },
        DistSpec::Deterministic { value: 1.0 },
        DistSpec::Exponential {
            rate: LAMBDA_DEADLINE,
        },
        dual_rewards(),
        jobs,
        seed.wrapping_add(i as u64),
    )
}

fn instance(
    i: usize,
    jobs: usize,
    seed: u64,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> (f64, f64, f64),
) -> Vec<Job> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
    let rate = grid_rate(i);
    let mut t = 0.0;
    (1..=jobs as u64)
        .map(|id| {
            t += -(1.0 - rng.random::<f64>()).ln() / rate;
            let (b, d, w) = draw(&mut rng);
            Job::new(id, t, b, d, w).expect("generated attributes are positive")
        })
        .collect()
}

/// Instance `i` of the two-reward oracle suite: unit service, deadlines
/// uniform on [2.5, 6], rewards 4 or 10.
pub fn t4_instance(i: usize, jobs: usize, seed: u64) -> Vec<Job> {
    instance(i, jobs, seed, |rng| {
        let d = rng.random_range(2.5..=6.0);
        let w = if rng.random_bool(0.5) { 10.0 } else { 4.0 };
        (1.0, d, w)
    })
}

/// Instance `i` of the two-service oracle suite: service 1 or 3, deadlines
/// uniform on [6.5, 15], unit reward.
pub fn t5_instance(i: usize, jobs: usize, seed: u64) -> Vec<Job> {
    instance(i, jobs, seed, |rng| {
        let b = if rng.random_bool(0.5) { 3.0 } else { 1.0 };
        (b, rng.random_range(6.5..=15.0), 1.0)
    })
}

fn bounds_spec(i: usize, jobs: usize, seed: u64) -> ScenarioSpec {
    ScenarioSpec::new(
        DistSpec::Exponential { rate: grid_rate(i) },
        DistSpec::TwoPoint {
            lo: 0.5,
            hi: 1.5,
            p_hi: 0.5,
        },
        DistSpec::Discrete {
            values: vec![2.0, 4.0, 6.0, 8.0],
            probs: vec![0.25; 4],
        },
        dual_rewards(),
        jobs,
        seed.wrapping_add(i as u64),
    )
}

fn constant_service_pair(jobs: &[Job]) -> Result<(SimulationTrace, SimulationTrace), Outcome> {
    let fail = |e| Outcome::Fail(format!("engine: {e}"));
    let mud = run_simulation(jobs, &mut Mud::new()).map_err(fail)?;
    let edf = run_simulation(jobs, &mut HeadPolicy::edf()).map_err(fail)?;
    Ok((mud, edf))
}

fn gen(spec: &ScenarioSpec) -> Result<Vec<Job>, Outcome> {
    generate_stream(spec).map_err(|e| Outcome::Fail(format!("workload: {e}")))
}

fn lemma1_run(i: usize, p: &SuiteParams) -> Outcome {
    match gen(&lemma1_spec(i, p.jobs, p.seed)) {
        Ok(jobs) => verify_lemma1(&jobs),
        Err(o) => o,
    }
}

/// Outcome plus whether the final difference was strictly positive.
fn asgood_run(i: usize, p: &SuiteParams) -> (Outcome, bool) {
    let pair = gen(&lemma1_spec(i, p.jobs, p.seed)).and_then(|jobs| constant_service_pair(&jobs));
    let (mud, edf) = match pair {
        Ok(x) => x,
        Err(o) => return (o, false),
    };
    let rel = compare_traces(&mud, &edf).expect("same stream");
    if rel.epochs.is_empty() {
        return (Outcome::Fail("no common empty-queue epoch".into()), false);
    }
    if !rel.as_good_as {
        let worst = rel
            .epochs
            .iter()
            .find(|e| e.delta < 0.0)
            .expect("some epoch is negative");
        return (
            Outcome::Fail(format!(
                "U_MUD - U_EDF = {} at the epoch after {} arrivals",
                worst.delta, worst.arrivals
            )),
            false,
        );
    }
    (Outcome::Pass, rel.epochs.iter().any(|e| e.delta > 0.0))
}

fn bounds_run(i: usize, p: &SuiteParams) -> Vec<(String, Outcome)> {
    let spec = bounds_spec(i, p.jobs, p.seed);
    let jobs = match gen(&spec) {
        Ok(j) => j,
        Err(o) => return vec![(format!("stream {i}"), o)],
    };
    let classes = RewardClasses::for_scenario(&spec);
    PolicyKind::ALL
        .into_iter()
        .map(|kind| {
            let label = format!("stream {i} {kind}");
            let first = run_simulation(&jobs, kind.build(&classes).as_mut());
            let second = run_simulation(&jobs, kind.build(&classes).as_mut());
            let outcome = match (first, second) {
                (Err(e), _) | (_, Err(e)) => Outcome::Fail(format!("engine: {e}")),
                (Ok(a), Ok(b)) if a != b => Outcome::Fail("two runs of one stream differ".into()),
                (Ok(a), _) => match (a.max_potential, a.queue_bound) {
                    (Some(m), Some(bound)) if m > bound => {
                        Outcome::Fail(format!("queue potential {m} exceeds bound {bound}"))
                    }
                    _ => Outcome::Pass,
                },
            };
            (label, outcome)
        })
        .collect()
}

/// Bounds of the adversarial suite: service 2, deadline 4, rewards 4 and 10,
/// spacing `b - 1`.
pub fn adversarial_bounds() -> ScenarioBounds {
    ScenarioBounds {
        b_min: 2.0,
        b_max: 2.0,
        d_min: 4.0,
        d_max: 4.0,
        w_min: 4.0,
        w_max: 10.0,
        delta_w: Some(6.0),
        a_delta: Some(1.0),
    }
}

/// The adversarial stream of the `better` suite.
pub fn adversarial_stream(repeats: usize) -> Vec<Job> {
    let b = adversarial_bounds();
    adversarial_mud_stream(&b, b.b_min - b.a_delta.expect("set above"), repeats)
        .expect("bounds are valid")
}

fn better(p: &SuiteParams, report: &mut SuiteReport) {
    let jobs = adversarial_stream(p.repeats);
    let delta_w = adversarial_bounds().delta_w.expect("set above");
    let (mud, edf) = match constant_service_pair(&jobs) {
        Ok(x) => x,
        Err(o) => return report.add("adversarial", o),
    };
    let rel = compare_traces(&mud, &edf).expect("same stream");
    let target = p.repeats as f64 * delta_w;
    report.notes.push(format!(
        "repeats={} final dU={} (bound {} = repeats * delta_W), min epoch dU={}, epochs={}",
        p.repeats,
        rel.final_delta,
        target,
        rel.min_delta,
        rel.epochs.len()
    ));
    let outcome = if !rel.as_good_as {
        Outcome::Fail(format!("negative epoch difference {}", rel.min_delta))
    } else if rel.final_delta < target {
        Outcome::Fail(format!("final dU {} below {target}", rel.final_delta))
    } else {
        Outcome::Pass
    };
    report.add("adversarial", outcome);
    report.add("adversarial lemma1", verify_lemma1(&jobs));
}

/// Runs one verification suite. Streams and instances are independent and
/// are checked in parallel.
pub fn run_suite(suite: Suite, p: &SuiteParams) -> SuiteReport {
    let mut report = SuiteReport::new(suite);
    let label = |i: usize| format!("run {i} (seed {}, lambda_a {})", p.seed.wrapping_add(i as u64), grid_rate(i));
    match suite {
        Suite::Lemma1 => {
            let out: Vec<Outcome> = (0..p.runs).into_par_iter().map(|i| lemma1_run(i, p)).collect();
            for (i, o) in out.into_iter().enumerate() {
                report.add(label(i), o);
            }
        }
        Suite::AsGood => {
            let out: Vec<(Outcome, bool)> =
                (0..p.runs).into_par_iter().map(|i| asgood_run(i, p)).collect();
            let strict = out.iter().filter(|(_, s)| *s).count();
            for (i, (o, _)) in out.into_iter().enumerate() {
                report.add(label(i), o);
            }
            report.notes.push(format!("{strict} of {} streams strictly better", p.runs));
            if strict == 0 && p.runs > 0 {
                report.add("suite", Outcome::Fail("no stream shows a strict gain".into()));
            }
        }
        Suite::Better => better(p, &mut report),
        Suite::T4 | Suite::T5 => {
            let out: Vec<Outcome> = (0..p.runs)
                .into_par_iter()
                .map(|i| {
                    let r = if suite == Suite::T4 {
                        verify_theorem4(&t4_instance(i, p.jobs, p.seed))
                    } else {
                        verify_theorem5(&t5_instance(i, p.jobs, p.seed))
                    };
                    r.unwrap_or_else(|e| Outcome::Fail(format!("oracle: {e}")))
                })
                .collect();
            for (i, o) in out.into_iter().enumerate() {
                report.add(label(i), o);
            }
        }
        Suite::Bounds => {
            let out: Vec<Vec<(String, Outcome)>> =
                (0..p.runs).into_par_iter().map(|i| bounds_run(i, p)).collect();
            for (l, o) in out.into_iter().flatten() {
                report.add(l, o);
            }
        }
    }
    report
}
