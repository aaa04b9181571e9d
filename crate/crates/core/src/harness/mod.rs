//! Simulation engine, configuration, failure injection, dataset generation
//! and experiment sweeps.

pub mod config;
pub mod dataset;
pub mod engine;
pub mod failures;
pub mod rng;
pub mod sweep;

pub use config::{DatasetConfig, PolicyKind, ScenarioConfig};
pub use engine::{run_episode, run_episode_with, Event, RunOptions, RunTrace, SimEnvironment};
pub use failures::{make_failure_schedule, FailureSchedule};
pub use rng::{stream_rng, Stream};
