use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rdq_cli::{cmd_oracle, cmd_reproduce, cmd_run, cmd_verify, Format};
use rdq_core::experiment::{StudyConfig, Suite, SuiteParams};
use rdq_core::oracle::DEFAULT_JOB_LIMIT;
use rdq_core::workload::Study;

#[derive(Parser)]
#[command(name = "rdq", version, about = "Single-server queue simulator with deadlines and rewards")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one policy on a scenario config; writes trace.csv and metrics.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// edf, medf, mud, cmutheta, cmutheta_edf, greedy or fcfs.
        #[arg(long, default_value = "mud")]
        policy: String,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config job count.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Sweep arrival rates, policies and seeds for one study.
    Reproduce {
        /// mmb (rewards 4 or 10) or mmm (exponential rewards).
        study: Study,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        /// First stream seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        jobs: usize,
        /// Arrival rates; defaults to 0.9,1.2,1.5,1.8,2.1.
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run a property suite: lemma1, asgood, better, t4, t5 or bounds.
    Verify {
        suite: Suite,
        /// Streams or instances to draw.
        #[arg(long, visible_alias = "instances")]
        runs: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// csv prints counts as text, json prints the full report.
        #[arg(long, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Solve an instance file exactly.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_JOB_LIMIT)]
        limit: usize,
        #[arg(long, default_value_t = Format::Csv)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            policy,
            seed,
            jobs,
            out,
        } => cmd_run(&config, &policy, seed, jobs, &out),
        Command::Reproduce {
            study,
            seeds,
            seed,
            jobs,
            lambda,
            out,
            format,
        } => {
            let mut cfg = StudyConfig::standard(study);
            cfg.seeds = seeds;
            cfg.base_seed = seed;
            cfg.n_jobs = jobs;
            if !lambda.is_empty() {
                cfg.lambdas = lambda;
            }
            cmd_reproduce(&cfg, &out, format)
        }
        Command::Verify {
            suite,
            runs,
            jobs,
            repeats,
            seed,
            format,
        } => {
            let d = SuiteParams::defaults(suite);
            let params = SuiteParams {
                runs: runs.unwrap_or(d.runs),
                jobs: jobs.unwrap_or(d.jobs),
                repeats: repeats.unwrap_or(d.repeats),
                seed: seed.unwrap_or(d.seed),
            };
            cmd_verify(suite, &params, format)
        }
        Command::Oracle {
            instance,
            limit,
            format,
        } => cmd_oracle(&instance, limit, format),
    };
    ExitCode::from(code as u8)
}
