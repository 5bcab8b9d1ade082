use std::path::Path;

use srl_agent::{action_scale_from_box, load_checkpoint, AgentNets, ReplayBuffer};

use crate::episode::{nominal_patch, run_episode, EpisodeContext, EpisodeLog};
use crate::{RunConfig, RunMode, RuntimeError};

/// Mission report with the usual navigation and energy columns. Task
/// metrics are absent after a fall; travel time and total energy are
/// absent after a collision (power reflects the average up to it).
#[derive(Clone, Debug)]
pub struct EvalReport {
    pub mode: RunMode,
    pub success: bool,
    pub fell: bool,
    pub collided: bool,
    pub waypoints: usize,
    pub travel_time: Option<f64>,
    pub avg_power: Option<f64>,
    pub total_energy: Option<f64>,
    pub log: EpisodeLog,
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn yn(v: bool) -> &'static str {
            if v {
                "Yes"
            } else {
                "No"
            }
        }
        fn num(v: &Option<f64>, fell: bool, collided: bool) -> String {
            match v {
                Some(x) => format!("{x:.4}"),
                None if fell => "N/A".into(),
                None if collided => "inf".into(),
                None => "N/A".into(),
            }
        }
        writeln!(
            f,
            "{:<14} {:>8} {:>8} {:>10} {:>9} {:>16} {:>14} {:>17}",
            "Mode", "Success", "Is Fall", "Collision", "Num (wp)", "Travel Time (s)", "Avg Power (W)", "Total Energy (J)"
        )?;
        write!(
            f,
            "{:<14} {:>8} {:>8} {:>10} {:>9} {:>16} {:>14} {:>17}",
            self.mode.to_string(),
            yn(self.success),
            yn(self.fell),
            yn(self.collided),
            self.waypoints,
            num(&self.travel_time, self.fell, self.collided),
            num(&self.avg_power, self.fell, self.collided),
            num(&self.total_energy, self.fell, self.collided),
        )
    }
}

/// Runs one exploration-free episode in the configured mode and folds the
/// outcome into the report conventions.
pub fn evaluate(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<EvalReport, RuntimeError> {
    cfg.validate()?;
    let world = cfg.load_world()?;
    let nominal = nominal_patch(cfg)?;
    let ctx = EpisodeContext {
        cfg,
        world: &world,
        nominal_patch: &nominal,
    };
    let spaces = cfg.build_spaces();
    let mut nets = match checkpoint {
        Some(path) => load_checkpoint(&cfg.agent, path)?.0,
        None => AgentNets::new(
            cfg.agent.clone(),
            action_scale_from_box(spaces.actions()),
            cfg.seed ^ 0xa9e1_7001,
        ),
    };
    // Evaluation stores nothing and never learns.
    let mut scratch_buffer = ReplayBuffer::new(cfg.agent.buffer_capacity.max(1), 0);
    let log = run_episode(&ctx, &mut nets, &mut scratch_buffer, cfg.seed, false)?;

    let s = &log.summary;
    let (travel_time, avg_power, total_energy) = if s.fell {
        (None, None, None)
    } else if s.collided {
        (None, Some(s.avg_power), None)
    } else {
        (Some(s.travel_time), Some(s.avg_power), Some(s.total_energy))
    };
    Ok(EvalReport {
        mode: cfg.mode,
        success: s.mission_complete && !s.fell && !s.collided,
        fell: s.fell,
        collided: s.collided,
        waypoints: s.waypoints_reached,
        travel_time,
        avg_power,
        total_energy,
        log,
    })
}
