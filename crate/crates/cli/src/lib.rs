//! Commands behind the `rdq` binary. Each returns the process exit code.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rdq_core::engine::{run, write_metrics_json, write_trace_csv, EngineError, TraceMode};
use rdq_core::experiment::{run_study, run_suite, ExperimentError, StudyConfig, Suite, SuiteParams};
use rdq_core::oracle::{optimal_offline_with, parse_instance};
use rdq_core::policy::{Policy, PolicyKind, RewardClasses};
use rdq_core::workload::{generate_stream, parse_config, ScenarioSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONTRACT: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn io_fail(what: &Path, e: impl fmt::Display) -> i32 {
    eprintln!("error: {}: {e}", what.display());
    EXIT_FAIL
}

/// Reads a scenario config, applying optional seed and size overrides.
pub fn load_scenario(
    config: &Path,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> Result<ScenarioSpec, String> {
    let text = fs::read_to_string(config).map_err(|e| format!("{}: {e}", config.display()))?;
    let mut spec = parse_config(&text).map_err(|e| format!("{}: {e}", config.display()))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(n) = jobs {
        spec.n_jobs = n;
    }
    spec.validate().map_err(|e| format!("{}: {e}", config.display()))?;
    Ok(spec)
}

/// `rdq run`: simulates one policy on one scenario and writes
/// `trace.csv` and `metrics.json` into `out`.
pub fn cmd_run(
    config: &Path,
    policy: &str,
    seed: Option<u64>,
    jobs: Option<usize>,
    out: &Path,
) -> i32 {
    let kind = match policy.parse::<PolicyKind>() {
        Ok(k) => k,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let spec = match load_scenario(config, seed, jobs) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let classes = RewardClasses::for_scenario(&spec);
    run_policy(&spec, kind.build(&classes), out)
}

/// Runs an already-built policy; the part of `rdq run` after argument
/// checking.
pub fn run_policy(spec: &ScenarioSpec, mut policy: Box<dyn Policy>, out: &Path) -> i32 {
    let jobs = match generate_stream(spec) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let trace = match run(&jobs, policy.as_mut(), TraceMode::Full) {
        Ok(t) => t,
        Err(e @ (EngineError::Contract { .. } | EngineError::Policy(_))) => {
            eprintln!("error: {} broke a contract: {e}", policy.name());
            return EXIT_CONTRACT;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let trace_path = out.join("trace.csv");
    if let Err(e) = create(&trace_path).map_err(|e| e.to_string()).and_then(|w| {
        write_trace_csv(&trace, w).map_err(|e| e.to_string())
    }) {
        return io_fail(&trace_path, e);
    }
    let metrics_path = out.join("metrics.json");
    if let Err(e) = create(&metrics_path).map_err(|e| e.to_string()).and_then(|mut w| {
        write_metrics_json(&trace, &mut w).map_err(|e| e.to_string())?;
        w.flush().map_err(|e| e.to_string())
    }) {
        return io_fail(&metrics_path, e);
    }
    println!(
        "{}: {} jobs, {} served, {} dropped, reward {}",
        trace.policy, trace.n_jobs, trace.served, trace.dropped, trace.total_reward
    );
    EXIT_OK
}

/// `rdq reproduce`: the standard sweep. Writes `<study>_table.<fmt>` and
/// `<study>_summary.json` into `out`.
pub fn cmd_reproduce(cfg: &StudyConfig, out: &Path, format: Format) -> i32 {
    let result = match run_study(cfg) {
        Ok(r) => r,
        Err(e @ ExperimentError::Engine { .. }) => {
            eprintln!("error: {e}");
            return EXIT_CONTRACT;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let study = cfg.study.as_str();
    let table = out.join(format!("{study}_table.{format}"));
    let written = create(&table).map_err(|e| e.to_string()).and_then(|mut w| {
        match format {
            Format::Csv => result.write_table_csv(&mut w).map_err(|e| e.to_string())?,
            Format::Json => serde_json::to_writer_pretty(&mut w, &result.cells).map_err(|e| e.to_string())?,
        }
        w.flush().map_err(|e| e.to_string())
    });
    if let Err(e) = written {
        return io_fail(&table, e);
    }
    let summary = out.join(format!("{study}_summary.json"));
    let written = create(&summary).map_err(|e| e.to_string()).and_then(|mut w| {
        result.write_summary_json(&mut w).map_err(|e| e.to_string())?;
        w.flush().map_err(|e| e.to_string())
    });
    if let Err(e) = written {
        return io_fail(&summary, e);
    }

    println!("{study}: {} jobs per run, {} seeds, relative to edf (mean +- 95% CI)", cfg.n_jobs, cfg.seeds);
    println!("{:>8} {:>13} {:>22} {:>22}", "lambda_a", "policy", "rel_reward", "rel_jobs");
    for a in &result.summary {
        println!(
            "{:>8} {:>13} {:>12.5} +- {:<7.5} {:>12.5} +- {:<7.5}",
            a.lambda_a, a.policy, a.rel_reward_mean, a.rel_reward_ci, a.rel_jobs_mean, a.rel_jobs_ci
        );
    }
    for n in &result.notes {
        println!("note: {n}");
    }
    EXIT_OK
}

/// `rdq verify`: runs a property suite and prints its counts.
pub fn cmd_verify(suite: Suite, params: &SuiteParams, format: Format) -> i32 {
    let report = run_suite(suite, params);
    match format {
        Format::Json => match serde_json::to_string_pretty(&report) {
            Ok(s) => println!("{s}"),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_FAIL;
            }
        },
        Format::Csv => print!("{report}"),
    }
    if report.ok() {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

/// `rdq oracle`: solves one instance file exactly.
pub fn cmd_oracle(instance: &Path, limit: usize, format: Format) -> i32 {
    let text = match fs::read_to_string(instance) {
        Ok(t) => t,
        Err(e) => return io_fail(instance, e),
    };
    let jobs = match parse_instance(&text) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {}: {e}", instance.display());
            return EXIT_CONFIG;
        }
    };
    let best = match optimal_offline_with(&jobs, limit, true) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match format {
        Format::Json => {
            let witness: Vec<_> = best
                .witness
                .iter()
                .map(|(id, t)| serde_json::json!({ "id": id.0, "start": t }))
                .collect();
            let v = serde_json::json!({
                "jobs": jobs.len(),
                "max_total_reward": best.max_total_reward,
                "max_topclass_count": best.max_topclass_count,
                "witness": witness,
            });
            println!("{v:#}");
        }
        Format::Csv => {
            println!("max_total_reward = {}", best.max_total_reward);
            println!("max_topclass_count = {}", best.max_topclass_count);
            println!("id,start");
            for (id, t) in &best.witness {
                println!("{},{t}", id.0);
            }
        }
    }
    EXIT_OK
}
