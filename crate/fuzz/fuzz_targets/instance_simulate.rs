#![no_main]

use libfuzzer_sys::fuzz_target;
use rdq_core::engine::run_simulation;
use rdq_core::oracle::{optimal_offline_with, parse_instance, replay_witness};
use rdq_core::policy::{PolicyKind, RewardClasses};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(jobs) = parse_instance(text) else {
        return;
    };
    if jobs.len() > 200 {
        return;
    }
    let classes = RewardClasses::from_jobs(&jobs);
    let best = (jobs.len() <= 8).then(|| optimal_offline_with(&jobs, 8, true).unwrap());
    for kind in PolicyKind::ALL {
        let trace = run_simulation(&jobs, kind.build(&classes).as_mut())
            .unwrap_or_else(|e| panic!("{kind}: {e}"));
        assert_eq!(trace.served + trace.dropped, jobs.len());
        if let Some(b) = &best {
            assert!(trace.total_reward <= b.max_total_reward * (1.0 + 1e-12));
        }
    }
    if let Some(b) = best {
        replay_witness(&jobs, &b.witness).unwrap();
    }
});
