use std::io::Write;

use serde::Serialize;

use super::SimulationTrace;
use crate::job::{Reward, Time};

/// Run summary written next to a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub policy: String,
    pub jobs: usize,
    pub served: usize,
    pub dropped: usize,
    pub reward: Reward,
    pub stream_checksum: String,
    pub queue_bound: Option<usize>,
    pub max_potential: Option<usize>,
    pub max_waiting: usize,
    pub epoch_times: Vec<Time>,
    pub epoch_rewards: Vec<Reward>,
}

impl From<&SimulationTrace> for Metrics {
    fn from(t: &SimulationTrace) -> Self {
        Self {
            policy: t.policy.clone(),
            jobs: t.n_jobs,
            served: t.served,
            dropped: t.dropped,
            reward: t.total_reward,
            stream_checksum: format!("{:016x}", t.stream_checksum),
            queue_bound: t.queue_bound,
            max_potential: t.max_potential,
            max_waiting: t.max_waiting,
            epoch_times: t.epochs.iter().map(|e| e.time).collect(),
            epoch_rewards: t.epochs.iter().map(|e| e.reward).collect(),
        }
    }
}

/// Writes `time,kind,job_id,qe_class,queue_potential,cum_reward` rows.
pub fn write_trace_csv<W: Write>(trace: &SimulationTrace, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "kind", "job_id", "qe_class", "queue_potential", "cum_reward"])?;
    for e in &trace.events {
        w.write_record([
            e.time.to_string(),
            e.kind.as_str().to_string(),
            e.job_id.0.to_string(),
            e.qe_class.map_or(String::new(), |q| q.as_str().to_string()),
            e.queue_potential_size.to_string(),
            e.cumulative_reward.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_json<W: Write>(trace: &SimulationTrace, out: W) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(out, &trace.metrics())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_simulation;
    use crate::job::Job;
    use crate::policy::HeadPolicy;

    #[test]
    fn csv_and_json() {
        let jobs = [Job::new(1, 0.0, 1.0, 1.0, 3.0).unwrap()];
        let trace = run_simulation(&jobs, &mut HeadPolicy::edf()).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time,kind,job_id,qe_class,queue_potential,cum_reward");
        assert_eq!(lines[1], "0,arrival,1,QE1,0,3");
        assert_eq!(lines[3], "1,service_complete,1,,0,3");

        let mut buf = Vec::new();
        write_metrics_json(&trace, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["served"], 1);
        assert_eq!(v["reward"], 3.0);
        assert_eq!(v["epoch_times"][0], 1.0);
    }
}
