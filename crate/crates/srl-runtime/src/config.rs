use serde::{Deserialize, Serialize};
use srl_agent::{AgentConfig, RewardConfig};
use srl_core::{SpaceConfig, SpaceConfigRaw};
use srl_nav::PlannerConfig;
use srl_plant::{PlantParams, SensorConfig, WorldModel};
use srl_teacher::TeacherConfig;

use crate::RuntimeError;

/// Which controllers an episode runs with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Coordinator switches between the agent and the safety controller.
    Framework,
    /// Agent alone; safety-set exits end the episode.
    StudentOnly,
    /// Safety controller alone, re-synthesized every horizon.
    TeacherOnly,
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RunMode::Framework => "framework",
            RunMode::StudentOnly => "student-only",
            RunMode::TeacherOnly => "teacher-only",
        };
        f.write_str(s)
    }
}

/// Sensing-and-planning parameters of the navigation stack.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct NavConfig {
    pub planner: PlannerConfig,
    pub sensor: SensorConfig,
    /// Occupancy height threshold (m).
    pub h_max: f64,
    /// Waypoint reach radius (m).
    pub reach_radius: f64,
    /// Planner fan width (rad).
    pub fov: f64,
    /// Half extent of the square local map around the robot (m).
    pub roi_half_extent: f64,
    /// Grid resolution of the local maps (m/cell).
    pub map_resolution: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            planner: PlannerConfig::default(),
            sensor: SensorConfig::default(),
            h_max: 0.3,
            reach_radius: 0.3,
            fov: 1.2,
            roi_half_extent: 4.5,
            map_resolution: 0.1,
        }
    }
}

/// Full run configuration; every field has a compiled default mirroring
/// the experiment setup, and any structured config file can override any
/// subset.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub episodes: usize,
    pub mode: RunMode,
    /// World file path; empty uses the built-in default mission.
    pub world: String,
    pub out_dir: String,
    /// Steps per episode at the configured sampling period.
    pub step_cap: usize,
    /// Steps between planner updates.
    pub plan_every: usize,
    /// Robot footprint radius for collision checks (m).
    pub footprint_radius: f64,
    pub spaces: SpaceConfigRaw,
    pub teacher: TeacherConfig,
    pub plant: PlantParams,
    pub agent: AgentConfig,
    pub reward: RewardConfig,
    pub nav: NavConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            episodes: 50,
            mode: RunMode::Framework,
            world: String::new(),
            out_dir: "out".into(),
            step_cap: 1200,
            plan_every: 10,
            footprint_radius: 0.25,
            spaces: SpaceConfigRaw::from_config(&SpaceConfig::default_experiment()),
            teacher: TeacherConfig::default(),
            plant: PlantParams::default(),
            agent: AgentConfig::default(),
            reward: RewardConfig::default(),
            nav: NavConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, RuntimeError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| RuntimeError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RuntimeError> {
        self.spaces
            .build()
            .map_err(|e| RuntimeError::Config(e.to_string()))?;
        self.teacher
            .validate()
            .map_err(RuntimeError::Config)?;
        self.plant.validate().map_err(RuntimeError::Config)?;
        if self.step_cap == 0 || self.plan_every == 0 {
            return Err(RuntimeError::Config(
                "step_cap and plan_every must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn build_spaces(&self) -> SpaceConfig {
        self.spaces.build().expect("validated space config")
    }

    /// Loads the configured world, or the built-in default mission when
    /// no path was given.
    pub fn load_world(&self) -> Result<WorldModel, RuntimeError> {
        if self.world.is_empty() {
            Ok(WorldModel::default_mission())
        } else {
            Ok(WorldModel::load(std::path::Path::new(&self.world))?)
        }
    }
}
