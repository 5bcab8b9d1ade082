use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use srl_core::RobotState;

use crate::WorldModel;

/// Forward-frustum depth sensor parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    /// Horizontal field of view (rad).
    pub fov: f64,
    /// Maximum range (m).
    pub range: f64,
    /// Number of azimuth rays across the field of view.
    pub n_rays: usize,
    /// Range-march step (m); defaults to the world resolution scale.
    pub step: f64,
    /// Vertical spacing of obstacle surface samples (m).
    pub column_step: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            fov: 1.5,
            range: 4.0,
            n_rays: 61,
            step: 0.1,
            column_step: 0.1,
        }
    }
}

/// World-frame point samples from the synthetic depth sensor.
#[derive(Clone, Debug, Default)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    /// Set when the requested pose was outside the world bounds.
    pub out_of_bounds: bool,
}

/// Ray-marches the heightmap and obstacle set inside a forward frustum,
/// emitting terrain surface points and obstacle column points. Rays stop
/// at the first obstacle hit, which gives occlusion for free.
pub fn sense_pointcloud(
    s: &RobotState,
    pose_xy: &Vector2<f64>,
    world: &WorldModel,
    cfg: &SensorConfig,
) -> PointCloud {
    let mut cloud = PointCloud::default();
    if !world.in_bounds(pose_xy) {
        cloud.out_of_bounds = true;
        return cloud;
    }

    let n = cfg.n_rays.max(1);
    for i in 0..n {
        let frac = if n == 1 {
            0.0
        } else {
            i as f64 / (n - 1) as f64 - 0.5
        };
        let az = s.yaw + frac * cfg.fov;
        let dir = Vector2::new(az.cos(), az.sin());
        let mut t = cfg.step;
        while t <= cfg.range {
            let p = pose_xy + dir * t;
            if !world.in_bounds(&p) {
                break;
            }
            if let Some(ob) = world.obstacles.iter().find(|o| o.contains_xy(&p)) {
                // Sample the obstacle surface column at the hit point.
                let base = world.terrain_height_at(&p);
                let mut z = base;
                while z < base + ob.size[2] {
                    cloud.points.push(Vector3::new(p.x, p.y, z));
                    z += cfg.column_step;
                }
                cloud.points.push(Vector3::new(p.x, p.y, base + ob.size[2]));
                break;
            }
            cloud
                .points
                .push(Vector3::new(p.x, p.y, world.terrain_height_at(&p)));
            t += cfg.step;
        }
    }
    cloud
}
