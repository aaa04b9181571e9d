//! Tick-driven swarm simulation.
//!
//! One tick is 0.1 s. Within a tick: scheduled failures, motion of every alive
//! UAV in ascending id, waypoint decisions for UAVs that reached their
//! waypoint, then the periodic pheromone step (1 s), hello exchange (2 s),
//! ConCov heading update (every sensing period) and metric sample (10 s).

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{CellCoord, GridSpec, Point};
use crate::kinematics::{
    reached, step_heading, step_motion, UavState, DT, MAX_TURN_RATE,
};
use crate::metrics::{bs_connected, MetricsSample, RunSummary, VisitGrid};
use crate::network::{
    build_graph, gamma, HelloMessage, HopState, HOLDDOWN_S, NeighborTable, BS_ID, STALENESS_S,
};
use crate::pheromone::{PheromoneMap, MAX_LEVEL, PATCH_CELLS};
use crate::policies::{bscap_select_slot, concov_heading, observe, pheromone_select_slot, ObserveContext};
use crate::rl::{
    action_mask, dqn_select_slot, featurize, reward, Agent, EpisodeOutcome, Environment, QNetwork,
    StateVector, TrainingTransition, N_ACTIONS,
};

use super::config::{PolicyKind, ScenarioConfig};
use super::failures::{make_failure_schedule, FailureSchedule};
use super::rng::{stream_rng, Stream};

pub const TICKS_PER_SECOND: u64 = 10;
const PHEROMONE_TICKS: u64 = TICKS_PER_SECOND;
const HELLO_TICKS: u64 = 2 * TICKS_PER_SECOND;
const SAMPLE_TICKS: u64 = 10 * TICKS_PER_SECOND;

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Decision {
        time: f64,
        uav: u8,
        slot: usize,
        cell: CellCoord,
    },
    Failure {
        time: f64,
        uav: u8,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub samples: Vec<MetricsSample>,
    pub events: Vec<Event>,
    pub summary: RunSummary,
    /// Sum of per-leg rewards over every completed leg of every UAV.
    pub total_reward: f64,
    pub completed_legs: usize,
    /// Present when transition collection was requested.
    pub transitions: Vec<TrainingTransition>,
}

/// Knobs beyond the scenario file.
pub struct RunOptions<'a> {
    /// Network for the `dqn` policy.
    pub net: Option<&'a QNetwork>,
    /// When set, every waypoint decision is delegated to this agent and every
    /// completed leg is reported to it.
    pub agent: Option<&'a mut dyn Agent>,
    /// Probability of replacing a built-in policy's choice by a uniform valid
    /// slot. Defaults to the config's `dqn_epsilon` for the DQN policy.
    pub explore_epsilon: Option<f64>,
    pub collect_transitions: bool,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        Self {
            net: None,
            agent: None,
            explore_epsilon: None,
            collect_transitions: false,
        }
    }
}

/// Cells entered since the last decision.
#[derive(Debug, Clone)]
struct Leg {
    state: StateVector,
    action: usize,
    new_cells: u32,
    revisited: u32,
}

struct Uav {
    state: UavState,
    map: PheromoneMap,
    table: NeighborTable,
    hops: HopState,
    cell: CellCoord,
    desired_heading: f64,
    leg: Option<Leg>,
}

struct Sim<'a, 'o> {
    cfg: &'a ScenarioConfig,
    grid: GridSpec,
    bs: Point,
    uavs: Vec<Uav>,
    visits: VisitGrid,
    failures: FailureSchedule,
    next_failure: usize,
    tie_rng: ChaCha8Rng,
    explore_rng: ChaCha8Rng,
    opts: RunOptions<'o>,
    explore_epsilon: f64,
    samples: Vec<MetricsSample>,
    events: Vec<Event>,
    transitions: Vec<TrainingTransition>,
    total_reward: f64,
    completed_legs: usize,
}

/// Uniform draw inside the upper half-disc of radius `r` around `c`, clipped to the map.
fn deploy_point(rng: &mut ChaCha8Rng, c: Point, r: f64, grid: &GridSpec) -> Point {
    loop {
        let rho = r * rng.gen::<f64>().sqrt();
        let theta = PI * rng.gen::<f64>();
        let p = Point::new(c.x + rho * theta.cos(), c.y + rho * theta.sin());
        if p.x >= 0.0 && p.y >= 0.0 && p.x <= grid.width_m() && p.y <= grid.height_m() {
            return p;
        }
    }
}

impl<'a, 'o> Sim<'a, 'o> {
    fn new(cfg: &'a ScenarioConfig, opts: RunOptions<'o>) -> Result<Self> {
        cfg.validate()?;
        if cfg.policy == PolicyKind::Dqn && opts.net.is_none() && opts.agent.is_none() {
            return Err(Error::config("the dqn policy needs a checkpoint"));
        }
        let grid = cfg.grid();
        let bs = cfg.bs_point();
        let mut deploy = stream_rng(cfg.seed, Stream::Deployment);
        let mut visits = VisitGrid::new(grid);
        let mut uavs = Vec::with_capacity(cfg.n_uavs);
        for i in 0..cfg.n_uavs {
            let position = deploy_point(&mut deploy, bs, cfg.deploy_radius_m, &grid);
            let heading = deploy.gen::<f64>() * TAU;
            let cell = grid.cell_of(position);
            let mut map = PheromoneMap::new(grid, cfg.evaporation, cfg.diffusion)?;
            map.deposit(cell)?;
            visits.visit(cell);
            uavs.push(Uav {
                state: UavState::new(i as u8 + 1, position, heading, cfg.speed_mps, cell),
                map,
                table: NeighborTable::new(),
                hops: HopState::default(),
                cell,
                desired_heading: heading,
                leg: None,
            });
        }
        let mut fail_rng = stream_rng(cfg.seed, Stream::Failures);
        let failures = make_failure_schedule(cfg.n_uavs, cfg.failure_pct, cfg.failure_horizon(), &mut fail_rng)?;
        let explore_epsilon = match (opts.explore_epsilon, cfg.policy) {
            (Some(e), _) => e,
            (None, PolicyKind::Dqn) => cfg.dqn_epsilon,
            (None, PolicyKind::Random) => 1.0,
            (None, _) => 0.0,
        };
        Ok(Self {
            cfg,
            grid,
            bs,
            uavs,
            visits,
            failures,
            next_failure: 0,
            tie_rng: stream_rng(cfg.seed, Stream::TieBreak),
            explore_rng: stream_rng(cfg.seed, Stream::Exploration),
            opts,
            explore_epsilon,
            samples: Vec::new(),
            events: Vec::new(),
            transitions: Vec::new(),
            total_reward: 0.0,
            completed_legs: 0,
        })
    }

    fn waypoint_driven(&self) -> bool {
        self.cfg.policy != PolicyKind::Concov || self.opts.agent.is_some()
    }

    fn alive_positions(&self) -> Vec<Point> {
        std::iter::once(self.bs)
            .chain(self.uavs.iter().filter(|u| u.state.alive).map(|u| u.state.position))
            .collect()
    }

    fn run(mut self) -> Result<RunTrace> {
        let total_ticks = (self.cfg.sim_seconds * TICKS_PER_SECOND as f64).round() as u64;
        let concov_ticks = ((self.cfg.concov.sensing_period * TICKS_PER_SECOND as f64).round() as u64).max(1);

        self.hello_exchange(0.0)?;
        if self.waypoint_driven() {
            let all: Vec<usize> = (0..self.uavs.len()).collect();
            self.decide(&all, 0.0)?;
        } else {
            self.concov_update(0.0);
        }

        for k in 1..=total_ticks {
            let t = k as f64 / TICKS_PER_SECOND as f64;
            self.apply_failures(t);
            let arrived = self.move_all()?;
            if !arrived.is_empty() {
                self.decide(&arrived, t)?;
            }
            if k % PHEROMONE_TICKS == 0 {
                for u in self.uavs.iter_mut().filter(|u| u.state.alive) {
                    u.map.step();
                }
            }
            if k % HELLO_TICKS == 0 {
                self.hello_exchange(t)?;
            }
            if !self.waypoint_driven() && k % concov_ticks == 0 {
                self.concov_update(t);
            }
            if k % SAMPLE_TICKS == 0 {
                self.sample(t);
            }
        }

        let summary = crate::metrics::summarize(&self.samples, &self.visits);
        Ok(RunTrace {
            samples: self.samples,
            events: self.events,
            summary,
            total_reward: self.total_reward,
            completed_legs: self.completed_legs,
            transitions: self.transitions,
        })
    }

    fn apply_failures(&mut self, t: f64) {
        while let Some(&(id, at)) = self.failures.events.get(self.next_failure) {
            if at > t + 1e-9 {
                break;
            }
            self.next_failure += 1;
            let u = &mut self.uavs[id as usize - 1];
            u.state.alive = false;
            u.leg = None;
            if self.cfg.record_events {
                self.events.push(Event::Failure { time: t, uav: id });
            }
        }
    }

    /// Moves every alive UAV one tick; returns indices that reached their waypoint.
    fn move_all(&mut self) -> Result<Vec<usize>> {
        let waypoint_driven = self.waypoint_driven();
        let mut arrived = Vec::new();
        for i in 0..self.uavs.len() {
            let u = &mut self.uavs[i];
            if !u.state.alive {
                continue;
            }
            if waypoint_driven {
                u.state = step_motion(&u.state, &self.grid, DT, MAX_TURN_RATE);
            } else {
                let (next, desired) = step_heading(&u.state, u.desired_heading, &self.grid, DT, MAX_TURN_RATE);
                u.state = next;
                u.desired_heading = desired;
            }
            let cell = self.grid.cell_of(u.state.position);
            if cell != u.cell {
                u.cell = cell;
                let before = self.visits.visit(cell);
                u.map.deposit(cell)?;
                if let Some(leg) = u.leg.as_mut() {
                    if before == 0 {
                        leg.new_cells += 1;
                    } else {
                        leg.revisited += 1;
                    }
                }
            }
            if waypoint_driven && reached(&u.state, &self.grid) {
                arrived.push(i);
            }
        }
        Ok(arrived)
    }

    fn decide(&mut self, which: &[usize], t: f64) -> Result<()> {
        // ground truth at arrival, shared by every UAV deciding this tick
        let alive: Vec<usize> = (0..self.uavs.len()).filter(|&i| self.uavs[i].state.alive).collect();
        let positions = self.alive_positions();
        let graph = build_graph(&positions, self.cfg.tx_range_m);
        let connected = bs_connected(&graph);
        let diagonal = self.grid.diagonal_m();

        for &i in which {
            if !self.uavs[i].state.alive {
                continue;
            }
            let node = alive.binary_search(&i).expect("alive UAV") + 1;
            let u = &mut self.uavs[i];
            u.table.evict(t, STALENESS_S);
            let obs = observe(
                &u.state,
                &ObserveContext {
                    grid: &self.grid,
                    map: &u.map,
                    table: &u.table,
                    bs_position: self.bs,
                    tx_range: self.cfg.tx_range_m,
                },
            );
            let state = featurize(&obs, diagonal);
            let mask = action_mask(&obs);

            if let Some(leg) = u.leg.take() {
                let k: f64 = positions
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != node)
                    .map(|(_, &p)| gamma(u.state.position.distance(p), self.cfg.tx_range_m))
                    .sum();
                let r = reward(leg.new_cells, leg.revisited, k, connected[node - 1], &self.cfg.reward);
                let transition = TrainingTransition {
                    state: leg.state,
                    action: leg.action,
                    reward: r,
                    next_state: state,
                    next_mask: mask,
                    terminal: false,
                };
                self.total_reward += r;
                self.completed_legs += 1;
                if let Some(agent) = self.opts.agent.as_deref_mut() {
                    agent.observe(transition.clone())?;
                }
                if self.opts.collect_transitions {
                    self.transitions.push(transition);
                }
            }

            let valid: Vec<usize> = (0..N_ACTIONS).filter(|&a| mask[a]).collect();
            let slot = if let Some(agent) = self.opts.agent.as_deref_mut() {
                agent.act(&state, &mask)?
            } else if !valid.is_empty()
                && self.explore_epsilon > 0.0
                && self.explore_rng.gen::<f64>() < self.explore_epsilon
            {
                valid[self.explore_rng.gen_range(0..valid.len())]
            } else {
                match self.cfg.policy {
                    PolicyKind::Pheromone | PolicyKind::Random => pheromone_select_slot(&obs, &mut self.tie_rng),
                    PolicyKind::Bscap | PolicyKind::Concov => bscap_select_slot(&obs, &self.cfg.bscap, &mut self.tie_rng),
                    PolicyKind::Dqn => {
                        let net = self.opts.net.expect("checked at construction");
                        dqn_select_slot(net, &state, &mask, 0.0, &mut self.tie_rng)?
                    }
                }
            };
            let cell = obs
                .cell(slot)
                .ok_or_else(|| Error::Training(format!("UAV {} chose unavailable slot {slot}", u.state.id)))?;
            u.state.waypoint = cell;
            u.leg = Some(Leg {
                state,
                action: slot,
                new_cells: 0,
                revisited: 0,
            });
            if self.cfg.record_events {
                self.events.push(Event::Decision {
                    time: t,
                    uav: u.state.id,
                    slot,
                    cell,
                });
            }
        }
        Ok(())
    }

    /// Composes every hello from the current state, then delivers them all.
    fn hello_exchange(&mut self, t: f64) -> Result<()> {
        let tx = self.cfg.tx_range_m;
        let mut outgoing: Vec<(u8, Point, [u8; 24])> = Vec::with_capacity(self.uavs.len() + 1);
        let bs_degree = self
            .uavs
            .iter()
            .filter(|u| u.state.alive && u.state.position.distance(self.bs) <= tx)
            .count();
        let mut bs_patch = [0u8; PATCH_CELLS];
        bs_patch[0] = bs_degree.min(MAX_LEVEL as usize) as u8;
        outgoing.push((BS_ID, self.bs, HelloMessage::new(BS_ID, self.bs, 0, bs_patch, 0).encode()?));

        for u in self.uavs.iter().filter(|u| u.state.alive) {
            let msg = HelloMessage::new(u.state.id, u.state.position, 0, [0; PATCH_CELLS], u.hops.hops());
            // the patch is centred where receivers will place it: the cell of
            // the transmitted position
            let centre = self.grid.cell_of(msg.position());
            let patch = u.map.extract_patch(centre)?;
            let waypoint = self.grid.index(u.state.waypoint) as u16;
            let msg = HelloMessage::new(u.state.id, u.state.position, waypoint, patch.levels, u.hops.hops());
            outgoing.push((u.state.id, u.state.position, msg.encode()?));
        }

        for u in self.uavs.iter_mut().filter(|u| u.state.alive) {
            for (sender, from, bytes) in &outgoing {
                if *sender == u.state.id || u.state.position.distance(*from) > tx {
                    continue;
                }
                let msg = HelloMessage::decode(bytes)?;
                u.table.receive(&msg, &self.grid, t);
                if msg.uav_id != BS_ID {
                    let center = self.grid.cell_of(msg.position());
                    u.map.merge_patch(&crate::pheromone::PheromonePatch {
                        center,
                        levels: msg.patch,
                    });
                }
            }
            u.table.evict(t, STALENESS_S);
        }
        for u in self.uavs.iter_mut().filter(|u| u.state.alive) {
            u.hops.update(&u.table, t, HOLDDOWN_S);
        }
        Ok(())
    }

    fn concov_update(&mut self, t: f64) {
        let ts = self.cfg.concov.sensing_period;
        let predicted: Vec<Point> = std::iter::once(self.bs)
            .chain(self.uavs.iter().filter(|u| u.state.alive).map(|u| {
                let s = &u.state;
                self.grid.clamp_point(Point::new(
                    s.position.x + s.speed * ts * s.heading.cos(),
                    s.position.y + s.speed * ts * s.heading.sin(),
                ))
            }))
            .collect();
        let connected = bs_connected(&build_graph(&predicted, self.cfg.tx_range_m));
        let mut node = 0;
        for u in self.uavs.iter_mut() {
            if !u.state.alive {
                continue;
            }
            u.table.evict(t, STALENESS_S);
            let neighbors: Vec<Point> = u.table.neighbors().map(|n| n.position).collect();
            let routed = u
                .table
                .best_routed_neighbor()
                .map(|n| u.state.position.bearing_to(n.position));
            u.desired_heading = concov_heading(&u.state, &neighbors, connected[node], routed, &self.cfg.concov);
            node += 1;
        }
    }

    fn sample(&mut self, t: f64) {
        let graph = build_graph(&self.alive_positions(), self.cfg.tx_range_m);
        let s = MetricsSample::from_graph(t, &graph, crate::metrics::coverage(&self.visits));
        self.samples.push(s);
    }
}

/// Runs one scenario with a built-in policy.
pub fn run_episode(cfg: &ScenarioConfig) -> Result<RunTrace> {
    run_episode_with(cfg, RunOptions::default())
}

pub fn run_episode_with(cfg: &ScenarioConfig, opts: RunOptions<'_>) -> Result<RunTrace> {
    Sim::new(cfg, opts)?.run()
}

/// Training environment: episode `e` runs the scenario with seed `base + e`.
pub struct SimEnvironment {
    pub config: ScenarioConfig,
}

impl Environment for SimEnvironment {
    fn run_episode(&mut self, episode: usize, agent: &mut dyn Agent) -> Result<EpisodeOutcome> {
        let mut cfg = self.config.clone();
        cfg.seed = self.config.seed.wrapping_add(episode as u64);
        cfg.record_events = false;
        let trace = run_episode_with(
            &cfg,
            RunOptions {
                agent: Some(agent),
                ..Default::default()
            },
        )?;
        Ok(EpisodeOutcome {
            total_reward: trace.total_reward,
            transitions: trace.completed_legs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(policy: PolicyKind) -> ScenarioConfig {
        ScenarioConfig {
            n_uavs: 8,
            sim_seconds: 300.0,
            policy,
            ..Default::default()
        }
    }

    #[test]
    fn identical_seeds_identical_traces() {
        for p in [PolicyKind::Bscap, PolicyKind::Concov, PolicyKind::Pheromone] {
            let a = run_episode(&small(p)).unwrap();
            let b = run_episode(&small(p)).unwrap();
            assert_eq!(a, b, "{p}");
            assert_eq!(a.samples.len(), 30);
        }
    }

    #[test]
    fn single_uav_coverage_monotone() {
        let cfg = ScenarioConfig {
            n_uavs: 1,
            sim_seconds: 1500.0,
            policy: PolicyKind::Pheromone,
            ..Default::default()
        };
        let trace = run_episode(&cfg).unwrap();
        let cov: Vec<f64> = trace.samples.iter().map(|s| s.coverage_pct).collect();
        assert!(cov.windows(2).all(|w| w[1] >= w[0]));
        assert!(cov.last().unwrap() > &cov[0]);
    }

    #[test]
    fn failed_uavs_leave_the_graph() {
        let cfg = ScenarioConfig {
            failure_pct: 50.0,
            ..small(PolicyKind::Bscap)
        };
        let trace = run_episode(&cfg).unwrap();
        let failures = trace.events.iter().filter(|e| matches!(e, Event::Failure { .. })).count();
        assert_eq!(failures, 4);
        assert_eq!(trace.samples.last().unwrap().tbs_connected.len(), 4);
    }

    #[test]
    fn dqn_requires_network() {
        let err = run_episode(&small(PolicyKind::Dqn)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn zero_exploration_replays_bscap() {
        let cfg = small(PolicyKind::Bscap);
        let plain = run_episode(&cfg).unwrap();
        let collected = run_episode_with(
            &cfg,
            RunOptions {
                explore_epsilon: Some(0.0),
                collect_transitions: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(plain.events, collected.events);
        assert_eq!(collected.transitions.len(), collected.completed_legs);
        for t in &collected.transitions {
            assert!(t.state.0.iter().chain(t.next_state.0.iter()).all(|v| (0.0..=1.0).contains(v)));
            assert!(t.next_mask.iter().any(|&m| m));
        }
    }
}
