//! Decentralized UAV swarm simulation: repel-pheromone coverage, base-station
//! aware waypoint selection, a potential-field baseline and a deep Q-learning
//! controller, with the metrics and experiment harness to compare them.

pub mod error;
pub mod grid;
pub mod harness;
pub mod kinematics;
pub mod metrics;
pub mod network;
pub mod pheromone;
pub mod policies;
pub mod rl;

pub use error::{Error, Result};
