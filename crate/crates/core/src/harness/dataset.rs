use rayon::prelude::*;

use crate::error::Result;
use crate::rl::TrainingTransition;

use super::config::{PolicyKind, ScenarioConfig};
use super::engine::{run_episode_with, RunOptions};

/// Rolls out epsilon-greedy BS-CAP for `episodes` episodes (seeds `cfg.seed + e`)
/// and returns one transition per completed leg per UAV, in episode order.
pub fn generate_offline_dataset(
    cfg: &ScenarioConfig,
    episodes: usize,
    epsilon: f64,
) -> Result<Vec<TrainingTransition>> {
    let mut base = cfg.clone();
    base.policy = PolicyKind::Bscap;
    base.record_events = false;
    base.validate()?;
    let per_episode: Vec<Result<Vec<TrainingTransition>>> = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut c = base.clone();
            c.seed = base.seed.wrapping_add(e as u64);
            let trace = run_episode_with(
                &c,
                RunOptions {
                    explore_epsilon: Some(epsilon),
                    collect_transitions: true,
                    ..Default::default()
                },
            )?;
            Ok(trace.transitions)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_episode {
        out.extend(r?);
    }
    Ok(out)
}
