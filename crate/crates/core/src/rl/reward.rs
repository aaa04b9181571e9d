use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    /// Coverage weight.
    pub m: f64,
    /// BS-connectivity weight.
    pub n: f64,
    /// Discount factor.
    pub gamma: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            m: 3.0,
            n: 3.0,
            gamma: 0.9,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config(format!("discount {} outside (0, 1)", self.gamma)));
        }
        if self.m < 0.0 || self.n < 0.0 {
            return Err(Error::config("reward weights must be non-negative"));
        }
        Ok(())
    }
}

/// Node-degree reward. `K = 3` falls in the penalized branch.
pub fn degree_reward(k: f64) -> f64 {
    if k > 1.0 && k <= 2.0 {
        -1.0
    } else if k > 2.0 && k < 3.0 {
        0.0
    } else {
        -4.0
    }
}

pub fn connectivity_reward(route: bool) -> f64 {
    if route {
        0.0
    } else {
        -3.0
    }
}

/// Reward for one waypoint leg.
pub fn reward(new_cells: u32, revisited_cells: u32, k_at_arrival: f64, route_at_arrival: bool, params: &RewardParams) -> f64 {
    let coverage = new_cells as f64 - revisited_cells as f64;
    params.m * coverage + degree_reward(k_at_arrival) + params.n * connectivity_reward(route_at_arrival)
}
