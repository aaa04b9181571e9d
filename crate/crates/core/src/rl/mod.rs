//! Deep Q-learning: state encoding, reward, a dense network with manual
//! backpropagation, replay memory, offline and online training.

pub mod checkpoint;
pub mod mlp;
pub mod optim;
pub mod replay;
pub mod reward;
pub mod state;
pub mod train;

pub use checkpoint::{load_checkpoint, load_dataset, save_checkpoint, save_dataset};
pub use mlp::{QNetwork, Sample, Q_LAYERS};
pub use replay::{ReplayBuffer, TrainingTransition};
pub use reward::{reward, RewardParams};
pub use state::{action_mask, featurize, StateVector, N_ACTIONS, STATE_DIM};
pub use train::{
    dqn_select, dqn_select_slot, offline_pretrain, online_train, Agent, EpisodeOutcome, Environment,
    GreedyAgent, OfflineHyper, OfflineReport, OnlineHyper, OnlineLearner, OnlineReport,
};
