//! Episode runtime: the coordinator that switches control between the
//! learning agent and the safety controller, the closed-loop episode and
//! training drivers, evaluation reports, and the structured run
//! configuration behind the command-line tools.

pub mod cli;
mod config;
mod coordinator;
mod episode;
mod eval;
mod training;

pub use config::{NavConfig, RunConfig, RunMode};
pub use coordinator::{coordinate, CoordinatorCtx, CoordinatorState, ControlMode, Event};
pub use episode::{run_episode, EpisodeContext, EpisodeLog, EpisodeSummary, StepRecord};
pub use eval::{evaluate, EvalReport};
pub use training::{run_training, TrainingOutput};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("config: {0}")]
    Config(String),
    #[error("world: {0}")]
    World(#[from] srl_plant::WorldError),
    #[error("plant: {0}")]
    Plant(#[from] srl_plant::PlantError),
    #[error("synthesis: {0}")]
    Synthesis(#[from] srl_teacher::SynthesisFailure),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] srl_agent::CheckpointError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialize: {0}")]
    Serialize(#[from] serde_json::Error),
}
