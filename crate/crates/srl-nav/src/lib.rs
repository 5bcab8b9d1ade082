//! Navigation pipeline: point cloud -> bird's-eye-view height grid ->
//! binary occupancy map -> fast-marching cost map -> short-term goal
//! selection with spline references, plus waypoint bookkeeping.

mod bev;
mod fmm;
mod occupancy;
mod planner;
mod waypoints;

pub use bev::{build_bev, HeightGrid, Roi};
pub use fmm::{descend_path, fmm_costmap, CostMap};
pub use occupancy::{build_occupancy, nearest_free_cell, OccupancyGrid};
pub use planner::{plan_reference, PlannerConfig, ReferenceCommand};
pub use waypoints::{WaypointStatus, WaypointTracker};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NavError {
    #[error("goal cell is outside the grid")]
    GoalOutside,
    #[error("goal cell is occupied")]
    GoalBlocked,
    #[error("pose cell has no finite cost")]
    PoseUnreachable,
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * std::f64::consts::PI);
    if x > std::f64::consts::PI {
        x -= 2.0 * std::f64::consts::PI;
    }
    x
}
