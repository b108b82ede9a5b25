//! A small deep Q-learning baseline.
//!
//! The network reads the one-hot health state (three entries per node) and
//! scores `n + 1` actions: treat node `k`, or do nothing. There is no action
//! masking, so the agent can waste treatments on nodes that are already
//! infected or immune.

mod network;
mod search;
mod train;

pub use network::{encode_observation, q_forward, td_loss_and_gradients, Dense, QNetwork, Transition};
pub use search::{random_search, SearchBudget, SearchRanges, SearchResult};
pub use train::{
    evaluate_returns, learning_curve_csv, train_dqn, EpsilonSchedule, QPolicy, ReplayBuffer, TrainConfig,
    TrainedAgent,
};
