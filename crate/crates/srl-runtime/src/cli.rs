//! Command-line entry points: certificate synthesis dumps, map
//! generation, single-episode simulation, training, and evaluation.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::Vector2;
use srl_core::{RobotState, StateVec, TrackingError};
use srl_nav::{build_bev, build_occupancy, fmm_costmap, nearest_free_cell, Roi};
use srl_plant::{nominal_model, WorldModel};
use srl_teacher::{synthesize_with_retry, verify_patch};

use crate::episode::{nominal_patch, run_episode, EpisodeContext};
use crate::{evaluate, run_training, RunConfig, RunMode, RuntimeError};

#[derive(Parser)]
#[command(name = "srl", about = "Safe runtime learning sandbox")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args)]
pub struct CommonArgs {
    /// Structured configuration file (TOML); defaults are compiled in.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Episode-count override.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Controller arrangement override.
    #[arg(long, value_enum)]
    pub mode: Option<RunMode>,
    /// Output directory override.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Synthesize one safety certificate and print its margins.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        /// Trigger error, ten comma-separated values; defaults to the
        /// self-learning boundary in forward velocity.
        #[arg(long)]
        trigger: Option<String>,
        /// Linearization state, ten comma-separated values; defaults to
        /// the nominal cruise state.
        #[arg(long)]
        state: Option<String>,
    },
    /// Build occupancy and cost maps for a world and write them out.
    Plan {
        #[command(flatten)]
        common: CommonArgs,
        /// World file; defaults to the built-in mission.
        #[arg(long)]
        world: Option<PathBuf>,
    },
    /// Run a single verbose episode.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the training loop and write per-episode metrics.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run an exploration-free evaluation episode and print the report.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Agent checkpoint to load (ignored in teacher-only mode).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, RuntimeError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(eps) = common.episodes {
        cfg.episodes = eps;
    }
    if let Some(mode) = common.mode {
        cfg.mode = mode;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn parse_vector(text: &str) -> Result<StateVec, RuntimeError> {
    let vals: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| RuntimeError::Config(format!("bad vector: {e}")))?;
    if vals.len() != 10 {
        return Err(RuntimeError::Config(format!(
            "expected 10 components, got {}",
            vals.len()
        )));
    }
    Ok(StateVec::from_iterator(vals))
}

/// Stable text dump of one synthesis: gain, Lyapunov matrix, horizon, and
/// certificate margins. Used for golden-file comparisons.
pub fn synth_text(cfg: &RunConfig, state: &RobotState, trigger: &TrackingError) -> Result<String, RuntimeError> {
    let spaces = cfg.build_spaces();
    let model = nominal_model(state, &cfg.plant);
    let patch = synthesize_with_retry(trigger, &cfg.teacher, &spaces, (&model.a, &model.b), 0)?;
    let report = verify_patch(&patch, trigger, &spaces, (&model.a, &model.b));

    let mut out = String::new();
    out.push_str("synthesis v1\n");
    out.push_str(&format!("tau {}\n", patch.tau));
    out.push_str(&format!(
        "params alpha={:.6} gamma={:.6} kappa={:.6} theta={:.6} chi={:.6}\n",
        patch.params_used.alpha,
        patch.params_used.gamma,
        patch.params_used.kappa,
        patch.params_used.theta,
        patch.params_used.chi
    ));
    out.push_str("F\n");
    for i in 0..6 {
        let row: Vec<String> = (0..10).map(|j| format!("{:+.6e}", patch.f_gain[(i, j)])).collect();
        out.push_str(&format!("  {}\n", row.join(" ")));
    }
    out.push_str("P\n");
    for i in 0..10 {
        let row: Vec<String> = (0..10).map(|j| format!("{:+.6e}", patch.p[(i, j)])).collect();
        out.push_str(&format!("  {}\n", row.join(" ")));
    }
    out.push_str(&format!("{report}\n"));
    Ok(out)
}

/// World-map products of the `plan` subcommand: occupancy and cost maps
/// as plain-text grids plus a portable graymap image of the cost field.
pub fn plan_outputs(cfg: &RunConfig, world: &WorldModel) -> Result<(String, String, String), RuntimeError> {
    // Full-knowledge cloud over the world: terrain plus obstacle columns.
    let mut points = Vec::new();
    let (lo, hi) = world.bounds();
    let res = world.resolution;
    let mut y = lo.y + res / 2.0;
    while y < hi.y {
        let mut x = lo.x + res / 2.0;
        while x < hi.x {
            let p = Vector2::new(x, y);
            let base = world.terrain_height_at(&p);
            if let Some(ob) = world.obstacles.iter().find(|o| o.contains_xy(&p)) {
                points.push(nalgebra::Vector3::new(x, y, base + ob.size[2]));
            } else {
                points.push(nalgebra::Vector3::new(x, y, base));
            }
            x += res;
        }
        y += res;
    }
    let roi = Roi { min: lo, max: hi };
    let bev = build_bev(&points, &roi, res);
    let occ = build_occupancy(&bev, cfg.nav.h_max);
    let destination = world
        .waypoints
        .last()
        .map(|w| Vector2::new(w[0], w[1]))
        .expect("validated world has waypoints");
    let goal_cell = occ.clamped_cell_of(&destination);
    let goal_cell = nearest_free_cell(&occ, goal_cell)
        .ok_or_else(|| RuntimeError::Config("world has no free cells".into()))?;
    let goal = occ.cell_center(goal_cell.0, goal_cell.1);
    let map = fmm_costmap(&occ, &goal).map_err(|e| RuntimeError::Config(e.to_string()))?;

    let mut occ_text = String::new();
    for iy in (0..occ.ny).rev() {
        for ix in 0..occ.nx {
            occ_text.push(if occ.is_occupied(ix, iy) { '#' } else { '.' });
        }
        occ_text.push('\n');
    }

    let mut cost_text = String::new();
    for iy in (0..map.ny).rev() {
        let row: Vec<String> = (0..map.nx)
            .map(|ix| {
                let c = map.at(ix, iy);
                if c.is_finite() {
                    format!("{c:.3}")
                } else {
                    "inf".into()
                }
            })
            .collect();
        cost_text.push_str(&row.join(" "));
        cost_text.push('\n');
    }

    // Portable graymap: obstacles white, costs scaled over the finite range.
    let max_cost = map
        .cost
        .iter()
        .filter(|c| c.is_finite())
        .fold(0.0f64, |a, &b| a.max(b));
    let mut pgm = format!("P2\n{} {}\n255\n", map.nx, map.ny);
    for iy in (0..map.ny).rev() {
        let row: Vec<String> = (0..map.nx)
            .map(|ix| {
                let c = map.at(ix, iy);
                if c.is_finite() {
                    format!("{}", (c / max_cost.max(1e-9) * 254.0) as u8)
                } else {
                    "255".into()
                }
            })
            .collect();
        pgm.push_str(&row.join(" "));
        pgm.push('\n');
    }
    Ok((occ_text, cost_text, pgm))
}

fn write_step_csv(path: &Path, log: &crate::EpisodeLog) -> Result<(), RuntimeError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(b"step,region,mode,source,e_vx,e_h,reward,power\n")?;
    for r in &log.records {
        let region = match r.region {
            srl_core::Region::SelfLearn => "self-learn",
            srl_core::Region::Marginal => "marginal",
            srl_core::Region::Unsafe => "unsafe",
        };
        let mode = match r.mode {
            crate::ControlMode::Student => "student",
            crate::ControlMode::Teacher => "teacher",
        };
        let source = match r.source {
            srl_agent::ActionSource::Student => "student",
            srl_agent::ActionSource::Teacher => "teacher",
        };
        f.write_all(
            format!(
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
                r.step, region, mode, source, r.e[4], r.e[0], r.reward.total, r.power
            )
            .as_bytes(),
        )?;
    }
    Ok(())
}

/// Runs the parsed command; returns a process exit code.
pub fn run(cli: Cli) -> Result<(), RuntimeError> {
    match cli.command {
        Command::Synth {
            common,
            trigger,
            state,
        } => {
            let cfg = load_config(&common)?;
            let spaces = cfg.build_spaces();
            let state = match state {
                Some(text) => RobotState::from_vector(&parse_vector(&text)?),
                None => {
                    let mut s = RobotState::zeroed();
                    s.h = cfg.nav.planner.h_d;
                    s.vx = cfg.nav.planner.vx_d;
                    s
                }
            };
            let trigger = match trigger {
                Some(text) => TrackingError(parse_vector(&text)?),
                None => {
                    let mut e = StateVec::zeros();
                    e[4] = -spaces.eta * spaces.safety().bound()[0];
                    TrackingError(e)
                }
            };
            print!("{}", synth_text(&cfg, &state, &trigger)?);
        }
        Command::Plan { common, world } => {
            let mut cfg = load_config(&common)?;
            if let Some(w) = world {
                cfg.world = w.to_string_lossy().into_owned();
            }
            let world = cfg.load_world()?;
            let out_dir = PathBuf::from(&cfg.out_dir);
            std::fs::create_dir_all(&out_dir)?;
            let (occ_text, cost_text, pgm) = plan_outputs(&cfg, &world)?;
            std::fs::write(out_dir.join("occupancy.txt"), occ_text)?;
            std::fs::write(out_dir.join("costmap.txt"), cost_text)?;
            std::fs::write(out_dir.join("costmap.pgm"), pgm)?;
            println!("wrote occupancy.txt, costmap.txt, costmap.pgm to {}", out_dir.display());
        }
        Command::Simulate { common } => {
            let cfg = load_config(&common)?;
            let world = cfg.load_world()?;
            let nominal = nominal_patch(&cfg)?;
            let ctx = EpisodeContext {
                cfg: &cfg,
                world: &world,
                nominal_patch: &nominal,
            };
            let spaces = cfg.build_spaces();
            let mut nets = srl_agent::AgentNets::new(
                cfg.agent.clone(),
                srl_agent::action_scale_from_box(spaces.actions()),
                cfg.seed ^ 0xa9e1_7001,
            );
            let mut buffer = srl_agent::ReplayBuffer::new(cfg.agent.buffer_capacity, cfg.seed);
            let log = run_episode(&ctx, &mut nets, &mut buffer, cfg.seed, true)?;
            let out_dir = PathBuf::from(&cfg.out_dir);
            std::fs::create_dir_all(&out_dir)?;
            write_step_csv(&out_dir.join("steps.csv"), &log)?;
            for (step, ev) in &log.events {
                println!("step {step}: {ev:?}");
            }
            let s = &log.summary;
            println!(
                "steps {} return {:.3} waypoints {} fell {} collided {} complete {}",
                s.steps, s.episode_return, s.waypoints_reached, s.fell, s.collided, s.mission_complete
            );
        }
        Command::Train { common } => {
            let cfg = load_config(&common)?;
            let out = run_training(&cfg, Path::new(&cfg.out_dir))?;
            println!(
                "wrote {} and {} ({} episodes)",
                out.csv_path.display(),
                out.summary_path.display(),
                out.episodes.len()
            );
        }
        Command::Eval { common, checkpoint } => {
            let cfg = load_config(&common)?;
            let report = evaluate(&cfg, checkpoint.as_deref())?;
            println!("{report}");
        }
    }
    Ok(())
}
