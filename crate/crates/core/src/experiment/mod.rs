//! Parameter sweeps over arrival rate, policy and seed, with every metric
//! taken relative to EDF on the same stream.

mod suites;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::engine::{run, stream_checksum, EngineError, TraceMode};
use crate::policy::{PolicyKind, RewardClasses};
use crate::workload::{generate_stream, Study, WorkloadError, LAMBDA_GRID, STUDY_JOBS};

pub use suites::{
    adversarial_bounds, adversarial_stream, lemma1_spec, run_suite, t4_instance, t5_instance,
    Suite, SuiteParams, SuiteReport,
};

/// Policies compared in the studies, baseline first.
pub const STUDY_POLICIES: [PolicyKind; 6] = [
    PolicyKind::Edf,
    PolicyKind::Mud,
    PolicyKind::Medf,
    PolicyKind::CmuTheta,
    PolicyKind::CmuThetaEdf,
    PolicyKind::Greedy,
];

pub const DEFAULT_SEEDS: usize = 10;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("{policy} at lambda_a={lambda_a}, seed {seed}: {source}")]
    Engine {
        lambda_a: f64,
        seed: u64,
        policy: &'static str,
        source: EngineError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub study: Study,
    pub lambdas: Vec<f64>,
    /// Stream seeds are `base_seed..base_seed + seeds`.
    pub seeds: usize,
    pub base_seed: u64,
    pub n_jobs: usize,
    pub policies: Vec<PolicyKind>,
}

impl StudyConfig {
    /// The standard grid, replicated over [`DEFAULT_SEEDS`] seeds.
    pub fn standard(study: Study) -> Self {
        Self {
            study,
            lambdas: LAMBDA_GRID.to_vec(),
            seeds: DEFAULT_SEEDS,
            base_seed: 0,
            n_jobs: STUDY_JOBS,
            policies: STUDY_POLICIES.to_vec(),
        }
    }
}

/// One row of the experiment table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub lambda_a: f64,
    pub policy: &'static str,
    pub seed: u64,
    pub served: usize,
    pub dropped: usize,
    pub reward: f64,
    pub rel_reward: f64,
    pub rel_jobs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamInfo {
    pub lambda_a: f64,
    pub seed: u64,
    pub checksum: String,
}

/// Mean over seeds with the half-width of a two-sided 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub lambda_a: f64,
    pub policy: &'static str,
    pub seeds: usize,
    pub reward_mean: f64,
    pub rel_reward_mean: f64,
    pub rel_reward_ci: f64,
    pub rel_jobs_mean: f64,
    pub rel_jobs_ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub study: Study,
    pub n_jobs: usize,
    pub cells: Vec<Cell>,
    pub summary: Vec<Aggregate>,
    pub streams: Vec<StreamInfo>,
    pub notes: Vec<String>,
}

fn ratio(x: f64, base: f64) -> f64 {
    if base == 0.0 {
        if x == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        x / base
    }
}

fn run_stream(
    cfg: &StudyConfig,
    lambda_a: f64,
    seed: u64,
) -> Result<(Vec<Cell>, StreamInfo), ExperimentError> {
    let spec = cfg.study.scenario(lambda_a, cfg.n_jobs, seed);
    let jobs = generate_stream(&spec)?;
    let classes = RewardClasses::for_scenario(&spec);
    let mut raw = Vec::with_capacity(cfg.policies.len() + 1);
    let mut kinds = vec![PolicyKind::Edf];
    kinds.extend(cfg.policies.iter().filter(|&&k| k != PolicyKind::Edf));
    for kind in kinds {
        let mut policy = kind.build(&classes);
        let trace = run(&jobs, policy.as_mut(), TraceMode::Summary).map_err(|source| {
            ExperimentError::Engine {
                lambda_a,
                seed,
                policy: kind.name(),
                source,
            }
        })?;
        raw.push((kind, trace.served, trace.dropped, trace.total_reward));
    }
    let (_, base_served, _, base_reward) = raw[0];
    let cells = raw
        .into_iter()
        .filter(|(k, ..)| cfg.policies.contains(k))
        .map(|(kind, served, dropped, reward)| Cell {
            lambda_a,
            policy: kind.name(),
            seed,
            served,
            dropped,
            reward,
            rel_reward: ratio(reward, base_reward),
            rel_jobs: ratio(served as f64, base_served as f64),
        })
        .collect();
    let info = StreamInfo {
        lambda_a,
        seed,
        checksum: format!("{:016x}", stream_checksum(&jobs)),
    };
    Ok((cells, info))
}

/// Runs every (arrival rate, seed) stream through every policy. EDF always
/// runs, as the baseline, even when it is not listed.
pub fn run_study(cfg: &StudyConfig) -> Result<ExperimentResult, ExperimentError> {
    let grid: Vec<(f64, u64)> = cfg
        .lambdas
        .iter()
        .flat_map(|&l| (0..cfg.seeds as u64).map(move |s| (l, cfg.base_seed + s)))
        .collect();
    let per_stream = grid
        .par_iter()
        .map(|&(l, s)| run_stream(cfg, l, s))
        .collect::<Result<Vec<_>, _>>()?;

    let mut cells = Vec::new();
    let mut streams = Vec::new();
    for (c, info) in per_stream {
        cells.extend(c);
        streams.push(info);
    }
    let mut summary = Vec::new();
    for &l in &cfg.lambdas {
        for kind in &cfg.policies {
            let rows: Vec<&Cell> = cells
                .iter()
                .filter(|c| c.lambda_a == l && c.policy == kind.name())
                .collect();
            let pick = |f: fn(&Cell) -> f64| rows.iter().map(|c| f(c)).collect::<Vec<_>>();
            let (rr, rr_ci) = mean_ci(&pick(|c| c.rel_reward), 0.95);
            let (rj, rj_ci) = mean_ci(&pick(|c| c.rel_jobs), 0.95);
            let (reward_mean, _) = mean_ci(&pick(|c| c.reward), 0.95);
            summary.push(Aggregate {
                lambda_a: l,
                policy: kind.name(),
                seeds: rows.len(),
                reward_mean,
                rel_reward_mean: rr,
                rel_reward_ci: rr_ci,
                rel_jobs_mean: rj,
                rel_jobs_ci: rj_ci,
            });
        }
    }
    Ok(ExperimentResult {
        study: cfg.study,
        n_jobs: cfg.n_jobs,
        cells,
        summary,
        streams,
        notes: vec![
            "cbs is not included: its definition is outside this model".into(),
            "every run drains the queue after the last arrival; there is no warm-up cut".into(),
        ],
    })
}

fn t_quantile(p: f64, n: usize) -> f64 {
    StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("n >= 2 gives a valid t distribution")
        .inverse_cdf(p)
}

/// Sample mean and the half-width of its two-sided `level` interval. The
/// half-width is 0 for fewer than two values.
pub fn mean_ci(values: &[f64], level: f64) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    (mean, t_quantile(0.5 + level / 2.0, n) * se)
}

/// Lower end of the one-sided `level` confidence interval for the mean.
pub fn one_sided_lower(values: &[f64], level: f64) -> f64 {
    let n = values.len();
    let (mean, _) = mean_ci(values, level);
    if n < 2 {
        return mean;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    mean - t_quantile(level, n) * (var / n as f64).sqrt()
}

impl ExperimentResult {
    pub fn cells_for(&self, lambda_a: f64, policy: PolicyKind) -> Vec<&Cell> {
        self.cells
            .iter()
            .filter(|c| c.lambda_a == lambda_a && c.policy == policy.name())
            .collect()
    }

    pub fn aggregate(&self, lambda_a: f64, policy: PolicyKind) -> Option<&Aggregate> {
        self.summary
            .iter()
            .find(|a| a.lambda_a == lambda_a && a.policy == policy.name())
    }

    /// Per-seed differences `f(a) - f(b)` at one arrival rate, paired by seed.
    pub fn paired(
        &self,
        lambda_a: f64,
        a: PolicyKind,
        b: PolicyKind,
        f: fn(&Cell) -> f64,
    ) -> Vec<f64> {
        let xs = self.cells_for(lambda_a, a);
        let ys = self.cells_for(lambda_a, b);
        xs.iter()
            .filter_map(|x| ys.iter().find(|y| y.seed == x.seed).map(|y| f(x) - f(y)))
            .collect()
    }

    /// Writes `lambda_a,policy,seed,served,dropped,reward,rel_reward,rel_jobs`.
    pub fn write_table_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cells {
            w.serialize(c)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(out, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(study: Study) -> StudyConfig {
        StudyConfig {
            lambdas: vec![0.9, 2.1],
            seeds: 3,
            n_jobs: 2000,
            ..StudyConfig::standard(study)
        }
    }

    #[test]
    fn edf_is_its_own_baseline() {
        let r = run_study(&small(Study::Mmb)).unwrap();
        assert_eq!(r.cells.len(), 2 * 3 * 6);
        assert_eq!(r.streams.len(), 6);
        for c in r.cells.iter().filter(|c| c.policy == "edf") {
            assert_eq!((c.rel_reward, c.rel_jobs), (1.0, 1.0));
        }
        let a = r.aggregate(2.1, PolicyKind::Edf).unwrap();
        assert_eq!((a.rel_reward_mean, a.rel_reward_ci), (1.0, 0.0));
    }

    #[test]
    fn identical_seed_identical_table() {
        let cfg = small(Study::Mmm);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        run_study(&cfg).unwrap().write_table_csv(&mut a).unwrap();
        run_study(&cfg).unwrap().write_table_csv(&mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("lambda_a,policy,seed,served,dropped,reward,rel_reward,rel_jobs\n"));
    }

    #[test]
    fn baseline_runs_when_unlisted() {
        let cfg = StudyConfig {
            policies: vec![PolicyKind::Mud],
            ..small(Study::Mmb)
        };
        let r = run_study(&cfg).unwrap();
        assert!(r.cells.iter().all(|c| c.policy == "mud"));
        assert!(r.cells.iter().all(|c| c.rel_reward.is_finite() && c.rel_jobs > 0.0));
    }

    #[test]
    fn intervals() {
        let (m, h) = mean_ci(&[1.0, 2.0, 3.0], 0.95);
        assert_eq!(m, 2.0);
        // t(0.975, 2) = 4.3027, se = 1/sqrt(3)
        assert!((h - 4.302_652_7 / 3f64.sqrt()).abs() < 1e-5);
        assert_eq!(mean_ci(&[5.0], 0.95), (5.0, 0.0));
        // t(0.95, 2) = 2.92
        let lo = one_sided_lower(&[1.0, 2.0, 3.0], 0.95);
        assert!((lo - (2.0 - 2.919_986 / 3f64.sqrt())).abs() < 1e-5);
    }
}
