//! Learning agent: observation and experience types, ring replay buffer
//! accepting both self-generated and teacher-generated tuples, reward
//! decomposition, and a compact deterministic-policy actor-critic with
//! in-crate analytic backpropagation.

mod actor_critic;
mod checkpoint;
mod experience;
mod nets;
mod replay;
mod reward;

pub use actor_critic::{
    act, action_scale_from_box, actor_objective_grads, critic_loss_grads, AgentConfig, AgentNets,
    UpdateStats,
};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use experience::{ActionSource, ExperienceTuple, Observation, OBS_DIM};
pub use nets::{Adam, Mlp, MlpGrads, OutputKind};
pub use replay::ReplayBuffer;
pub use reward::{reward, NavEvents, RewardConfig, RewardTerms};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
