use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::CellCoord;
use crate::kinematics::STRAIGHT_SLOT;
use crate::policies::{pick_slot, Observation};

use super::mlp::{QNetwork, Sample};
use super::optim::{Adam, Sgd};
use super::replay::{ReplayBuffer, TrainingTransition};
use super::state::{action_mask, featurize, StateVector, N_ACTIONS};

/// Offline (batch) pre-training settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfflineHyper {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplier applied to the learning rate after every epoch.
    pub lr_decay: f64,
    /// Minibatches between target-network refreshes.
    pub target_refresh: usize,
    pub gamma: f64,
}

impl Default for OfflineHyper {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 1024,
            learning_rate: 1e-4,
            lr_decay: 0.95,
            target_refresh: 3000,
            gamma: 0.9,
        }
    }
}

/// Online training settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OnlineHyper {
    pub episodes: usize,
    pub replay_capacity: usize,
    /// Pushed transitions between gradient steps.
    pub update_every: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Gradient steps between target-network refreshes.
    pub target_refresh: usize,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the episodes over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
}

impl Default for OnlineHyper {
    fn default() -> Self {
        Self {
            episodes: 4000,
            replay_capacity: 10_000,
            update_every: 30,
            batch_size: 512,
            learning_rate: 1e-4,
            target_refresh: 100,
            gamma: 0.9,
            epsilon_start: 0.1,
            epsilon_end: 0.01,
            epsilon_decay_fraction: 0.5,
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::config(format!("discount {gamma} outside [0, 1)")))
    }
}

impl OfflineHyper {
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if self.epochs == 0 || self.batch_size == 0 || self.target_refresh == 0 {
            return Err(Error::config("offline epochs, batch_size and target_refresh must be positive"));
        }
        if !(self.learning_rate > 0.0) || !(self.lr_decay > 0.0) {
            return Err(Error::config("offline learning rate and decay must be positive"));
        }
        Ok(())
    }
}

impl OnlineHyper {
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if self.replay_capacity == 0 || self.update_every == 0 || self.batch_size == 0 || self.target_refresh == 0 {
            return Err(Error::config("online replay_capacity, update_every, batch_size and target_refresh must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("online learning rate must be positive"));
        }
        for e in [self.epsilon_start, self.epsilon_end, self.epsilon_decay_fraction] {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::config("epsilon settings must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Exploration rate for a 0-based episode index.
    pub fn epsilon(&self, episode: usize) -> f64 {
        let span = self.episodes as f64 * self.epsilon_decay_fraction;
        if span <= 0.0 {
            return self.epsilon_end;
        }
        let frac = (episode as f64 / span).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Greedy value over the valid actions of `mask` (all actions if none are valid).
fn masked_max(q: &[f64], mask: &[bool; N_ACTIONS]) -> f64 {
    let valid = q.iter().zip(mask).filter(|(_, &m)| m).map(|(&v, _)| v);
    let best = valid.fold(f64::NEG_INFINITY, f64::max);
    if best.is_finite() {
        best
    } else {
        q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Bellman target `r + gamma * max_a' Q_target(s', a')`, or `r` when terminal.
pub fn bellman_target(target: &QNetwork, t: &TrainingTransition, gamma: f64) -> Result<f64> {
    if t.terminal || gamma == 0.0 {
        return Ok(t.reward);
    }
    let q = target.forward(t.next_state.as_slice())?;
    Ok(t.reward + gamma * masked_max(&q, &t.next_mask))
}

fn loss_step<'a>(
    net: &QNetwork,
    target: &QNetwork,
    batch: impl Iterator<Item = &'a TrainingTransition>,
    gamma: f64,
) -> Result<(f64, Vec<f64>)> {
    let mut samples = Vec::new();
    for t in batch {
        samples.push(Sample {
            state: t.state.as_slice(),
            action: t.action,
            target: bellman_target(target, t, gamma)?,
        });
    }
    let (loss, grad) = net.loss_and_gradient(&samples)?;
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Training(format!("loss diverged to {loss}")));
    }
    Ok((loss, grad))
}

/// Result of offline pre-training.
#[derive(Debug, Clone)]
pub struct OfflineReport {
    pub net: QNetwork,
    /// Mean minibatch loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Fits `net` to the dataset with minibatch gradient descent against a
/// periodically refreshed frozen target copy.
pub fn offline_pretrain<R: Rng + ?Sized>(
    mut net: QNetwork,
    data: &[TrainingTransition],
    hyper: &OfflineHyper,
    rng: &mut R,
) -> Result<OfflineReport> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(Error::config("offline dataset is empty"));
    }
    let mut target = net.clone();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut sgd = Sgd { lr: hyper.learning_rate };
    let mut minibatches = 0usize;
    let mut epoch_losses = Vec::with_capacity(hyper.epochs);

    for _ in 0..hyper.epochs {
        order.shuffle(rng);
        let mut sum = 0.0;
        let mut count = 0usize;
        for chunk in order.chunks(hyper.batch_size) {
            let (loss, grad) = loss_step(&net, &target, chunk.iter().map(|&i| &data[i]), hyper.gamma)?;
            sgd.step(net.params_mut(), &grad);
            sum += loss;
            count += 1;
            minibatches += 1;
            if minibatches % hyper.target_refresh == 0 {
                target = net.clone();
            }
        }
        if !net.is_finite() {
            return Err(Error::Training("non-finite parameters after epoch".into()));
        }
        epoch_losses.push(sum / count as f64);
        sgd.lr *= hyper.lr_decay;
    }
    Ok(OfflineReport { net, epoch_losses })
}

/// Epsilon-greedy action selection over valid slots. Ties among equal
/// Q-values follow the same rule as the heuristic policies.
pub fn dqn_select_slot<R: Rng + ?Sized>(
    net: &QNetwork,
    state: &StateVector,
    mask: &[bool; N_ACTIONS],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    let valid: Vec<usize> = (0..N_ACTIONS).filter(|&a| mask[a]).collect();
    if valid.is_empty() {
        return Ok(STRAIGHT_SLOT);
    }
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Ok(valid[rng.gen_range(0..valid.len())]);
    }
    let q = net.forward(state.as_slice())?;
    Ok(pick_slot(valid.iter().map(|&a| (a, q[a])), true, rng).expect("non-empty"))
}

pub fn dqn_select<R: Rng + ?Sized>(
    net: &QNetwork,
    obs: &Observation,
    diagonal_m: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<CellCoord> {
    let state = featurize(obs, diagonal_m);
    let slot = dqn_select_slot(net, &state, &action_mask(obs), epsilon, rng)?;
    obs.cell(slot)
        .ok_or_else(|| Error::Training("observation has no candidate waypoints".into()))
}

/// Decision maker driven by an [`Environment`].
pub trait Agent {
    fn act(&mut self, state: &StateVector, mask: &[bool; N_ACTIONS]) -> Result<usize>;
    /// Receives every completed transition, in the order they complete.
    fn observe(&mut self, transition: TrainingTransition) -> Result<()>;
}

/// Summary of one training episode.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpisodeOutcome {
    pub total_reward: f64,
    pub transitions: usize,
}

impl EpisodeOutcome {
    pub fn mean_reward(&self) -> f64 {
        if self.transitions == 0 {
            0.0
        } else {
            self.total_reward / self.transitions as f64
        }
    }
}

pub trait Environment {
    fn run_episode(&mut self, episode: usize, agent: &mut dyn Agent) -> Result<EpisodeOutcome>;
}

/// Shared online learner: one network and one replay memory for all UAVs.
pub struct OnlineLearner<R> {
    pub net: QNetwork,
    target: QNetwork,
    adam: Adam,
    replay: ReplayBuffer,
    hyper: OnlineHyper,
    rng: R,
    epsilon: f64,
    pushed: usize,
    losses: Vec<f64>,
}

impl<R: Rng> OnlineLearner<R> {
    pub fn new(net: QNetwork, hyper: OnlineHyper, rng: R) -> Result<Self> {
        hyper.validate()?;
        Ok(Self {
            target: net.clone(),
            adam: Adam::new(net.params().len(), hyper.learning_rate),
            replay: ReplayBuffer::new(hyper.replay_capacity),
            net,
            hyper,
            rng,
            epsilon: hyper.epsilon_start,
            pushed: 0,
            losses: Vec::new(),
        })
    }

    pub fn set_epsilon(&mut self, epsilon: f64) {
        self.epsilon = epsilon;
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn gradient_steps(&self) -> u64 {
        self.adam.steps()
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    fn gradient_step(&mut self) -> Result<()> {
        let batch = self.replay.sample(self.hyper.batch_size, &mut self.rng);
        let (loss, grad) = loss_step(&self.net, &self.target, batch.into_iter(), self.hyper.gamma)?;
        self.adam.step(self.net.params_mut(), &grad);
        if !self.net.is_finite() {
            return Err(Error::Training(format!(
                "parameters became non-finite at gradient step {}",
                self.adam.steps()
            )));
        }
        self.losses.push(loss);
        if self.adam.steps() % self.hyper.target_refresh as u64 == 0 {
            self.target = self.net.clone();
        }
        Ok(())
    }
}

impl<R: Rng> Agent for OnlineLearner<R> {
    fn act(&mut self, state: &StateVector, mask: &[bool; N_ACTIONS]) -> Result<usize> {
        dqn_select_slot(&self.net, state, mask, self.epsilon, &mut self.rng)
    }

    fn observe(&mut self, transition: TrainingTransition) -> Result<()> {
        self.replay.push(transition);
        self.pushed += 1;
        if self.pushed % self.hyper.update_every == 0 {
            self.gradient_step()?;
        }
        Ok(())
    }
}

/// Result of online training.
#[derive(Debug, Clone)]
pub struct OnlineReport {
    pub net: QNetwork,
    pub episodes: Vec<EpisodeOutcome>,
    pub gradient_steps: u64,
}

pub fn online_train<E: Environment, R: Rng>(
    env: &mut E,
    initial: QNetwork,
    hyper: &OnlineHyper,
    rng: R,
) -> Result<OnlineReport> {
    let mut learner = OnlineLearner::new(initial, *hyper, rng)?;
    let mut episodes = Vec::with_capacity(hyper.episodes);
    for ep in 0..hyper.episodes {
        learner.set_epsilon(hyper.epsilon(ep));
        episodes.push(env.run_episode(ep, &mut learner)?);
    }
    Ok(OnlineReport {
        gradient_steps: learner.gradient_steps(),
        net: learner.net,
        episodes,
    })
}

/// Fixed-network agent used for evaluation.
pub struct GreedyAgent<'a, R> {
    pub net: &'a QNetwork,
    pub epsilon: f64,
    pub rng: R,
}

impl<R: Rng> Agent for GreedyAgent<'_, R> {
    fn act(&mut self, state: &StateVector, mask: &[bool; N_ACTIONS]) -> Result<usize> {
        dqn_select_slot(self.net, state, mask, self.epsilon, &mut self.rng)
    }

    fn observe(&mut self, _transition: TrainingTransition) -> Result<()> {
        Ok(())
    }
}
