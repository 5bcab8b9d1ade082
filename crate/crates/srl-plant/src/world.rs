use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid world: {0}")]
    Invalid(String),
    #[error("world io: {0}")]
    Io(String),
    #[error("world parse: {0}")]
    Parse(String),
}

/// Axis-aligned box obstacle standing on the terrain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstacleBox {
    /// Center of the footprint in world coordinates (m).
    pub center: [f64; 2],
    /// Extents: x-size, y-size, height (m).
    pub size: [f64; 3],
}

impl ObstacleBox {
    pub fn min_xy(&self) -> Vector2<f64> {
        Vector2::new(
            self.center[0] - self.size[0] / 2.0,
            self.center[1] - self.size[1] / 2.0,
        )
    }

    pub fn max_xy(&self) -> Vector2<f64> {
        Vector2::new(
            self.center[0] + self.size[0] / 2.0,
            self.center[1] + self.size[1] / 2.0,
        )
    }

    pub fn contains_xy(&self, p: &Vector2<f64>) -> bool {
        let lo = self.min_xy();
        let hi = self.max_xy();
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    /// True when a disc of the given radius around `p` overlaps the box
    /// footprint.
    pub fn intersects_disc(&self, p: &Vector2<f64>, radius: f64) -> bool {
        let lo = self.min_xy();
        let hi = self.max_xy();
        let cx = p.x.clamp(lo.x, hi.x);
        let cy = p.y.clamp(lo.y, hi.y);
        let dx = p.x - cx;
        let dy = p.y - cy;
        dx * dx + dy * dy <= radius * radius
    }
}

/// Rectangular region with a friction scale applied to commanded linear
/// accelerations while the robot stands inside it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrictionRegion {
    pub min: [f64; 2],
    pub max: [f64; 2],
    /// Scale factor in (0, 1].
    pub scale: f64,
}

impl FrictionRegion {
    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        p.x >= self.min[0] && p.x <= self.max[0] && p.y >= self.min[1] && p.y <= self.max[1]
    }
}

/// Heightmap form stored in world files: either a uniform fill or an
/// explicit row-major grid. Keeping the raw form makes save/load lossless.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightmapRaw {
    pub nx: usize,
    pub ny: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fill: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<Vec<f64>>>,
}

/// Terrain, obstacles, mission waypoints and friction regions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    /// Grid resolution (m/cell).
    pub resolution: f64,
    /// World position of cell (0, 0)'s corner.
    pub origin: [f64; 2],
    pub heightmap: HeightmapRaw,
    #[serde(default)]
    pub obstacles: Vec<ObstacleBox>,
    pub waypoints: Vec<[f64; 2]>,
    #[serde(default)]
    pub friction_regions: Vec<FrictionRegion>,
}

impl WorldModel {
    pub fn validate(&self) -> Result<(), WorldError> {
        if !(self.resolution > 0.0) {
            return Err(WorldError::Invalid("resolution must be positive".into()));
        }
        if self.waypoints.is_empty() {
            return Err(WorldError::Invalid("waypoint list must not be empty".into()));
        }
        if self
            .friction_regions
            .iter()
            .any(|r| !(r.scale > 0.0))
        {
            return Err(WorldError::Invalid("friction scales must be positive".into()));
        }
        let hm = &self.heightmap;
        match (&hm.fill, &hm.data) {
            (Some(_), None) => {}
            (None, Some(rows)) => {
                if rows.len() != hm.ny || rows.iter().any(|r| r.len() != hm.nx) {
                    return Err(WorldError::Invalid(format!(
                        "heightmap data must be {} rows of {} values",
                        hm.ny, hm.nx
                    )));
                }
            }
            _ => {
                return Err(WorldError::Invalid(
                    "heightmap needs exactly one of fill or data".into(),
                ))
            }
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.heightmap.nx
    }

    pub fn ny(&self) -> usize {
        self.heightmap.ny
    }

    /// World-coordinate bounds as (min, max).
    pub fn bounds(&self) -> (Vector2<f64>, Vector2<f64>) {
        let lo = Vector2::new(self.origin[0], self.origin[1]);
        let hi = lo
            + Vector2::new(
                self.nx() as f64 * self.resolution,
                self.ny() as f64 * self.resolution,
            );
        (lo, hi)
    }

    pub fn in_bounds(&self, p: &Vector2<f64>) -> bool {
        let (lo, hi) = self.bounds();
        p.x >= lo.x && p.x < hi.x && p.y >= lo.y && p.y < hi.y
    }

    /// Terrain height at a world position (nearest cell; 0 outside).
    pub fn terrain_height_at(&self, p: &Vector2<f64>) -> f64 {
        if !self.in_bounds(p) {
            return 0.0;
        }
        match (&self.heightmap.fill, &self.heightmap.data) {
            (Some(f), _) => *f,
            (None, Some(rows)) => {
                let ix = ((p.x - self.origin[0]) / self.resolution) as usize;
                let iy = ((p.y - self.origin[1]) / self.resolution) as usize;
                rows[iy.min(self.ny() - 1)][ix.min(self.nx() - 1)]
            }
            _ => 0.0,
        }
    }

    /// Combined friction scale at a position (product over regions).
    pub fn friction_scale_at(&self, p: &Vector2<f64>) -> f64 {
        self.friction_regions
            .iter()
            .filter(|r| r.contains(p))
            .map(|r| r.scale)
            .product()
    }

    /// First obstacle whose footprint overlaps a disc, if any.
    pub fn obstacle_hit(&self, p: &Vector2<f64>, radius: f64) -> Option<&ObstacleBox> {
        self.obstacles.iter().find(|o| o.intersects_disc(p, radius))
    }

    pub fn from_toml_str(text: &str) -> Result<Self, WorldError> {
        let w: WorldModel = toml::from_str(text).map_err(|e| WorldError::Parse(e.to_string()))?;
        w.validate()?;
        Ok(w)
    }

    pub fn to_toml_string(&self) -> Result<String, WorldError> {
        toml::to_string(self).map_err(|e| WorldError::Io(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, WorldError> {
        let text = std::fs::read_to_string(path).map_err(|e| WorldError::Io(e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), WorldError> {
        std::fs::write(path, self.to_toml_string()?).map_err(|e| WorldError::Io(e.to_string()))
    }

    /// Default mission: a 12 m x 6 m flat corridor with three flanking
    /// box obstacles, four waypoints, and one low-friction patch.
    pub fn default_mission() -> Self {
        let w = Self {
            resolution: 0.1,
            origin: [-1.0, -3.0],
            heightmap: HeightmapRaw {
                nx: 120,
                ny: 60,
                fill: Some(0.0),
                data: None,
            },
            obstacles: vec![
                ObstacleBox {
                    center: [3.5, 1.0],
                    size: [0.6, 0.6, 0.5],
                },
                ObstacleBox {
                    center: [5.5, -1.1],
                    size: [0.6, 0.6, 0.5],
                },
                ObstacleBox {
                    center: [7.5, 1.0],
                    size: [0.6, 0.6, 0.5],
                },
            ],
            waypoints: vec![[2.0, 0.0], [4.5, 0.5], [7.0, -0.5], [9.5, 0.0]],
            friction_regions: vec![FrictionRegion {
                min: [5.0, -3.0],
                max: [6.0, 3.0],
                scale: 0.7,
            }],
        };
        w.validate().expect("default mission world");
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_mission_is_valid() {
        let w = WorldModel::default_mission();
        assert_eq!(w.waypoints.len(), 4);
        let (lo, hi) = w.bounds();
        assert!(lo.x < 0.0 && hi.x > 10.0);
    }

    #[test]
    fn toml_round_trip_is_lossless() {
        let w = WorldModel::default_mission();
        let text = w.to_toml_string().unwrap();
        let back = WorldModel::from_toml_str(&text).unwrap();
        assert_eq!(back, w);

        // Explicit heightmap data round-trips too.
        let mut w2 = w.clone();
        w2.heightmap = HeightmapRaw {
            nx: 3,
            ny: 2,
            fill: None,
            data: Some(vec![vec![0.0, 0.125, -0.25], vec![0.5, 0.0625, 1.0 / 3.0]]),
        };
        let text2 = w2.to_toml_string().unwrap();
        let back2 = WorldModel::from_toml_str(&text2).unwrap();
        assert_eq!(back2, w2);
    }

    #[test]
    fn friction_scale_applies_inside_region() {
        let w = WorldModel::default_mission();
        assert_eq!(w.friction_scale_at(&Vector2::new(5.5, 0.0)), 0.7);
        assert_eq!(w.friction_scale_at(&Vector2::new(2.0, 0.0)), 1.0);
    }

    #[test]
    fn obstacle_disc_intersection() {
        let o = ObstacleBox {
            center: [1.0, 0.0],
            size: [0.4, 0.4, 0.5],
        };
        assert!(o.intersects_disc(&Vector2::new(0.7, 0.0), 0.15));
        assert!(!o.intersects_disc(&Vector2::new(0.5, 0.0), 0.15));
    }

    #[test]
    fn rejects_empty_waypoints() {
        let mut w = WorldModel::default_mission();
        w.waypoints.clear();
        assert!(w.validate().is_err());
    }
}
