use std::time::Instant;

use uav_swarm::harness::{run_episode, PolicyKind, ScenarioConfig};

#[test]
fn fifty_uav_episode_under_ten_seconds() {
    for policy in [PolicyKind::Bscap, PolicyKind::Concov] {
        let cfg = ScenarioConfig {
            n_uavs: 50,
            sim_seconds: 3000.0,
            policy,
            record_events: false,
            ..Default::default()
        };
        let start = Instant::now();
        let trace = run_episode(&cfg).unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        println!("{policy}: {elapsed:.2} s");
        assert_eq!(trace.samples.len(), 300);
        assert!(elapsed < 10.0, "{policy} took {elapsed:.2} s");
    }
}
