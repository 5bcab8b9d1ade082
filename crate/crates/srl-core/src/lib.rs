//! Shared domain types and polytope-set algebra for the safe runtime
//! learning sandbox: robot state / tracking-error layout, box-style
//! constraint sets, and the region tests every other crate builds on.

mod error;
mod sets;
mod state;

pub use error::CoreError;
pub use sets::{
    action_in_bounds, membership, region_of, ActionsRaw, PolytopeBox, Region, SafetyRaw,
    SpaceConfig, SpaceConfigRaw,
};
pub use state::{Action, RobotState, TrackingError, ACTION_DIM, PITCH_LIMIT, STATE_DIM};

/// Fixed-size state vector `[h, roll, pitch, yaw, vx, vy, vz, wx, wy, wz]`.
pub type StateVec = nalgebra::SVector<f64, STATE_DIM>;
/// Fixed-size action vector `[av_x, av_y, av_z, aw_x, aw_y, aw_z]`.
pub type ActionVec = nalgebra::SVector<f64, ACTION_DIM>;
