//! Ground-truth reduced-order quadruped plant: nonlinear single-rigid-body
//! CoM simulator with configurable model mismatch and terrain, the nominal
//! discrete-time linearized model used by the safety controller, synthetic
//! exteroceptive sensing over a heightmap world, and a motor power proxy.

mod model;
mod power;
mod sensor;
mod truth;
mod world;

pub use model::{euler_rate_matrix, nominal_model, NominalModel, PlantParams};
pub use power::proxy_power;
pub use sensor::{sense_pointcloud, PointCloud, SensorConfig};
pub use truth::{mismatch_delta, read_state, step_truth, Plant};
pub use world::{FrictionRegion, ObstacleBox, WorldError, WorldModel};

/// 10x10 nominal state-transition matrix.
pub type AMatrix = nalgebra::SMatrix<f64, 10, 10>;
/// 10x6 nominal input matrix.
pub type BMatrix = nalgebra::SMatrix<f64, 10, 6>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("simulation fault: non-finite state after step")]
    NonFiniteState,
    #[error("action must be finite")]
    NonFiniteAction,
}
