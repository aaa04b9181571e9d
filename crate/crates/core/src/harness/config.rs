//! Scenario configuration, read from TOML. Every table rejects unknown keys.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Point};
use crate::policies::{BsCapParams, ConCovParams};
use crate::rl::{OfflineHyper, OnlineHyper, RewardParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Pheromone,
    Bscap,
    Concov,
    Dqn,
    /// Uniform choice among valid candidates.
    Random,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Pheromone => "pheromone",
            PolicyKind::Bscap => "bscap",
            PolicyKind::Concov => "concov",
            PolicyKind::Dqn => "dqn",
            PolicyKind::Random => "random",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pheromone" => Ok(PolicyKind::Pheromone),
            "bscap" | "bs-cap" => Ok(PolicyKind::Bscap),
            "concov" => Ok(PolicyKind::Concov),
            "dqn" => Ok(PolicyKind::Dqn),
            "random" => Ok(PolicyKind::Random),
            other => Err(Error::config(format!("unknown policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub episodes: usize,
    /// Probability of a uniform random action instead of the BS-CAP choice.
    pub epsilon: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            episodes: 10,
            epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Map side length, kilometers (square map).
    pub map_km: f64,
    pub cell_m: f64,
    pub n_uavs: usize,
    pub speed_mps: f64,
    pub tx_range_m: f64,
    pub sim_seconds: f64,
    pub evaporation: f64,
    pub diffusion: f64,
    /// Defaults to the bottom centre of the map.
    pub bs_position: Option<[f64; 2]>,
    pub deploy_radius_m: f64,
    pub failure_pct: f64,
    /// Failure times are drawn over `(0, failure_horizon_s]`; defaults to the run length.
    pub failure_horizon_s: Option<f64>,
    pub seed: u64,
    pub policy: PolicyKind,
    /// Exploration rate of the DQN policy during evaluation.
    pub dqn_epsilon: f64,
    /// Keep the per-decision event log in the trace.
    pub record_events: bool,
    pub bscap: BsCapParams,
    pub concov: ConCovParams,
    pub reward: RewardParams,
    pub offline: OfflineHyper,
    pub online: OnlineHyper,
    pub dataset: DatasetConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            map_km: 6.0,
            cell_m: 100.0,
            n_uavs: 30,
            speed_mps: 20.0,
            tx_range_m: 1000.0,
            sim_seconds: 3000.0,
            evaporation: 0.006,
            diffusion: 0.006,
            bs_position: None,
            deploy_radius_m: 500.0,
            failure_pct: 0.0,
            failure_horizon_s: None,
            seed: 1,
            policy: PolicyKind::Bscap,
            dqn_epsilon: 0.0,
            record_events: true,
            bscap: BsCapParams::default(),
            concov: ConCovParams::default(),
            reward: RewardParams::default(),
            offline: OfflineHyper::default(),
            online: OnlineHyper::default(),
            dataset: DatasetConfig::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be positive, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        positive("map_km", self.map_km)?;
        positive("cell_m", self.cell_m)?;
        positive("speed_mps", self.speed_mps)?;
        positive("tx_range_m", self.tx_range_m)?;
        positive("sim_seconds", self.sim_seconds)?;
        positive("deploy_radius_m", self.deploy_radius_m)?;
        let cells = self.map_km * 1000.0 / self.cell_m;
        if (cells - cells.round()).abs() > 1e-9 || cells < 3.0 {
            return Err(Error::config(format!(
                "map side {} km is not a whole number (>= 3) of {} m cells",
                self.map_km, self.cell_m
            )));
        }
        let grid = self.grid();
        if grid.n_cells() > crate::network::WAYPOINT_LIMIT as usize {
            return Err(Error::config(format!(
                "grid of {} cells exceeds the hello waypoint field",
                grid.n_cells()
            )));
        }
        if self.n_uavs == 0 || self.n_uavs > crate::network::MAX_ID as usize {
            return Err(Error::config(format!(
                "n_uavs must be in 1..={}, got {}",
                crate::network::MAX_ID,
                self.n_uavs
            )));
        }
        if !(0.0..=100.0).contains(&self.failure_pct) {
            return Err(Error::config(format!("failure_pct {} outside [0, 100]", self.failure_pct)));
        }
        if let Some(h) = self.failure_horizon_s {
            positive("failure_horizon_s", h)?;
        }
        for (name, rate) in [("evaporation", self.evaporation), ("diffusion", self.diffusion)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::config(format!("{name} {rate} outside [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.dqn_epsilon) || !(0.0..=1.0).contains(&self.dataset.epsilon) {
            return Err(Error::config("exploration rates must lie in [0, 1]"));
        }
        let bs = self.bs_point();
        if bs.x < 0.0 || bs.y < 0.0 || bs.x > grid.width_m() || bs.y > grid.height_m() {
            return Err(Error::config(format!("bs_position ({}, {}) outside the map", bs.x, bs.y)));
        }
        self.bscap.validate()?;
        self.concov.validate()?;
        self.reward.validate()?;
        self.offline.validate()?;
        self.online.validate()?;
        Ok(())
    }

    pub fn grid(&self) -> GridSpec {
        let side = (self.map_km * 1000.0 / self.cell_m).round() as usize;
        GridSpec::new(side, side, self.cell_m)
    }

    pub fn bs_point(&self) -> Point {
        match self.bs_position {
            Some([x, y]) => Point::new(x, y),
            None => Point::new(self.map_km * 500.0, 0.0),
        }
    }

    pub fn failure_horizon(&self) -> f64 {
        self.failure_horizon_s.unwrap_or(self.sim_seconds)
    }

    /// Policy parameters relevant to the configured policy, as a short label.
    pub fn params_label(&self) -> String {
        match self.policy {
            PolicyKind::Bscap => format!("beta={};beta_prime={}", self.bscap.beta, self.bscap.beta_prime),
            PolicyKind::Concov => format!(
                "omega={};ts={};r={}",
                self.concov.omega, self.concov.sensing_period, self.concov.sensing_range
            ),
            PolicyKind::Dqn => format!("n={};epsilon={}", self.reward.n, self.dqn_epsilon),
            PolicyKind::Pheromone | PolicyKind::Random => String::new(),
        }
    }
}
