use nalgebra::Vector2;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srl_agent::{
    act, ActionSource, AgentNets, ExperienceTuple, NavEvents, Observation, ReplayBuffer,
    RewardTerms,
};
use srl_core::{region_of, ActionVec, Region, RobotState, StateVec, TrackingError};
use srl_nav::{
    build_bev, build_occupancy, fmm_costmap, nearest_free_cell, plan_reference, wrap_angle,
    ReferenceCommand, Roi, WaypointTracker,
};
use srl_plant::{nominal_model, proxy_power, sense_pointcloud, Plant, WorldModel};
use srl_teacher::{synthesize_with_retry, teacher_action, Patch};

use crate::coordinator::{coordinate, ControlMode, CoordinatorCtx, CoordinatorState, Event};
use crate::{RunConfig, RunMode, RuntimeError};

/// Per-step record of an episode.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub step: usize,
    pub region: Region,
    pub mode: ControlMode,
    pub source: ActionSource,
    pub e: StateVec,
    pub action: ActionVec,
    pub reward: RewardTerms,
    pub power: f64,
}

/// Episode outcome counters.
#[derive(Clone, Debug, Default)]
pub struct EpisodeSummary {
    pub fell: bool,
    pub collided: bool,
    pub mission_complete: bool,
    pub waypoints_reached: usize,
    pub steps: usize,
    /// Episode duration (s).
    pub travel_time: f64,
    pub total_energy: f64,
    pub avg_power: f64,
    pub episode_return: f64,
    pub syntheses: usize,
    pub teacher_steps: usize,
    pub out_of_certificate_steps: usize,
}

/// Full episode trace.
#[derive(Clone, Debug)]
pub struct EpisodeLog {
    pub seed: u64,
    pub records: Vec<StepRecord>,
    pub events: Vec<(usize, Event)>,
    pub summary: EpisodeSummary,
}

/// Long-lived pieces shared across the episodes of a run.
pub struct EpisodeContext<'a> {
    pub cfg: &'a RunConfig,
    pub world: &'a WorldModel,
    /// Patch used for the stability reward before the first trigger and
    /// as the synthesis fallback.
    pub nominal_patch: &'a Patch,
}

/// Builds the reference state for a command: commanded height and
/// heading, planar velocity along the commanded heading, and the clipped
/// yaw-rate reference.
/// Tracking error with the yaw component wrapped into (-pi, pi].
fn wrapped_error(s: &RobotState, r: &RobotState) -> TrackingError {
    let mut e = TrackingError::from_states(s, r);
    e.0[3] = wrap_angle(e.0[3]);
    TrackingError(e.0)
}

fn build_reference(cmd: &ReferenceCommand) -> RobotState {
    let mut r = RobotState::zeroed();
    r.h = cmd.h_d;
    r.yaw = cmd.heading_d;
    r.vx = cmd.vx_d * cmd.heading_d.cos();
    r.vy = cmd.vx_d * cmd.heading_d.sin();
    r.wz = cmd.wz_ref;
    r
}

/// Synthesizes the pre-run nominal patch: experiment state, trigger on
/// the self-learning boundary in forward velocity.
pub fn nominal_patch(cfg: &RunConfig) -> Result<Patch, RuntimeError> {
    let spaces = cfg.build_spaces();
    let mut s = RobotState::zeroed();
    s.h = cfg.nav.planner.h_d;
    s.vx = cfg.nav.planner.vx_d;
    let model = nominal_model(&s, &cfg.plant);
    let mut e = StateVec::zeros();
    e[4] = -spaces.eta * spaces.safety().bound()[0];
    let patch = synthesize_with_retry(
        &TrackingError(e),
        &cfg.teacher,
        &spaces,
        (&model.a, &model.b),
        0,
    )?;
    Ok(patch)
}

/// Runs the sensing-and-planning pipeline once.
fn plan_tick(
    cfg: &RunConfig,
    world: &WorldModel,
    plant: &mut Plant,
    tracker: &WaypointTracker,
) -> ReferenceCommand {
    let s = plant.state;
    let pos = plant.pos;
    let cloud = sense_pointcloud(&s, &pos, world, &cfg.nav.sensor);
    let heading = s.yaw;
    let half = cfg.nav.roi_half_extent;
    let roi = Roi {
        min: Vector2::new(pos.x - half, pos.y - half),
        max: Vector2::new(pos.x + half, pos.y + half),
    };
    let bev = build_bev(&cloud.points, &roi, cfg.nav.map_resolution);
    let occ = build_occupancy(&bev, cfg.nav.h_max);

    // Project the active waypoint into the local grid, nudging it off
    // obstacles and grid edges.
    let goal_cell = occ.clamped_cell_of(&tracker.target());
    let goal_cell = match nearest_free_cell(&occ, goal_cell) {
        Some(c) => c,
        None => return ReferenceCommand::stop(cfg.nav.planner.h_d, heading),
    };
    let goal_pos = occ.cell_center(goal_cell.0, goal_cell.1);
    let map = match fmm_costmap(&occ, &goal_pos) {
        Ok(m) => m,
        Err(_) => return ReferenceCommand::stop(cfg.nav.planner.h_d, heading),
    };
    let speed = (s.vx * s.vx + s.vy * s.vy).sqrt();
    plan_reference(&map, (&pos, heading), speed, cfg.nav.fov, &cfg.nav.planner)
}

/// Closed-loop episode: sense, plan, coordinate, act, step, reward,
/// store, learn. Terminates on mission completion, safety violation,
/// collision, or the step cap.
pub fn run_episode(
    ctx: &EpisodeContext,
    nets: &mut AgentNets,
    buffer: &mut ReplayBuffer,
    seed: u64,
    learn: bool,
) -> Result<EpisodeLog, RuntimeError> {
    let cfg = ctx.cfg;
    let spaces = cfg.build_spaces();
    let dt = cfg.plant.dt;
    let mut explore_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0001);

    let mut start_state = RobotState::zeroed();
    start_state.h = cfg.nav.planner.h_d;
    let mut plant_params = cfg.plant.clone();
    plant_params.noise_seed = seed ^ 0x5eed_0002;
    let mut plant = Plant::new(start_state, Vector2::new(0.0, 0.0), plant_params);

    let waypoints: Vec<Vector2<f64>> = ctx
        .world
        .waypoints
        .iter()
        .map(|w| Vector2::new(w[0], w[1]))
        .collect();
    let mut tracker = WaypointTracker::new(waypoints, cfg.nav.reach_radius);

    let mut cs = CoordinatorState::initial();
    let mut command = plan_tick(cfg, ctx.world, &mut plant, &tracker);
    let mut frozen_ref: Option<RobotState> = None;
    let mut e_prev: Option<TrackingError> = None;
    let mut last_patch: Option<Patch> = None;

    let mut log = EpisodeLog {
        seed,
        records: Vec::with_capacity(cfg.step_cap),
        events: Vec::new(),
        summary: EpisodeSummary::default(),
    };

    for step in 0..cfg.step_cap {
        let s = plant.observe();
        let pos = plant.pos;

        // Planner tick; paused while the teacher holds a frozen reference.
        let teaching = cs.mode == ControlMode::Teacher && cfg.mode == RunMode::Framework;
        if step > 0 && step % cfg.plan_every == 0 && !teaching {
            command = plan_tick(cfg, ctx.world, &mut plant, &tracker);
        }
        let r = match (&frozen_ref, teaching) {
            (Some(fr), true) => *fr,
            _ => build_reference(&command),
        };
        let e_now = wrapped_error(&s, &r);
        let region = region_of(&e_now, &spaces).expect("validated spaces");

        let model = nominal_model(&s, &cfg.plant);
        let fallback = last_patch.clone().unwrap_or_else(|| ctx.nominal_patch.clone());
        let cctx = CoordinatorCtx {
            spaces: &spaces,
            teacher: &cfg.teacher,
            model: (&model.a, &model.b),
            step,
            fallback: Some(&fallback),
            mode: cfg.mode,
        };
        let (cs_next, source, events) = coordinate(&cs, e_prev.as_ref(), &e_now, &cctx);
        let violated = events.contains(&Event::SafetyViolation);
        let entered_teaching = events
            .iter()
            .any(|e| matches!(e, Event::Triggered { .. } | Event::Retrigger));
        for ev in &events {
            log.events.push((step, *ev));
            if matches!(ev, Event::Triggered { .. } | Event::Retrigger) {
                log.summary.syntheses += 1;
            }
        }
        cs = cs_next;
        if let Some(p) = &cs.active_patch {
            last_patch = Some(p.clone());
        }
        if violated {
            if std::env::var("SRL_DEBUG").is_ok() {
                eprintln!("violation at step {step}: e = {:?}", e_now.0.as_slice());
                eprintln!("  reference = {:?}", r);
                eprintln!("  state = {:?}", s);
            }
            log.summary.fell = true;
            log.summary.steps = step;
            break;
        }
        if entered_teaching && cfg.mode == RunMode::Framework {
            frozen_ref = Some(r);
        }
        if cs.mode == ControlMode::Student && frozen_ref.is_some() {
            // Teaching just ended; resume live planning immediately.
            frozen_ref = None;
            command = plan_tick(cfg, ctx.world, &mut plant, &tracker);
        }

        // Pre-step waypoint geometry for the observation.
        let target = tracker.target();
        let to_target = target - pos;
        let d_before = to_target.norm();
        let psi_before = wrap_angle(to_target.y.atan2(to_target.x) - s.yaw);
        let o_now = Observation {
            d_wp: d_before,
            psi_wp: psi_before,
            e: e_now,
        };

        // Action from the active controller; exploration only while the
        // student is both in control and learning.
        let reward_patch = cs.active_patch.as_ref().unwrap_or(&fallback);
        let (action, out_of_cert) = match source {
            ActionSource::Teacher => {
                let patch = cs.active_patch.as_ref().unwrap_or(&fallback);
                let cmd = teacher_action(patch, &e_now, spaces.actions());
                (cmd.action, cmd.out_of_certificate)
            }
            ActionSource::Student => {
                let noise = if learn { cfg.agent.explore_noise } else { 0.0 };
                let (a, _fault) = act(nets, &o_now, noise, &mut explore_rng);
                (a, false)
            }
        };
        if out_of_cert {
            log.summary.out_of_certificate_steps += 1;
        }
        if source == ActionSource::Teacher {
            log.summary.teacher_steps += 1;
        }

        let power = proxy_power(&action, &s, &cfg.plant);
        plant.step(&action, ctx.world)?;
        let s_next = plant.state;
        let new_pos = plant.pos;

        // Collision against the true obstacle footprints.
        let collided = ctx
            .world
            .obstacle_hit(&new_pos, cfg.footprint_radius)
            .is_some();

        let d_after = (target - new_pos).norm();
        let psi_after = wrap_angle((target - new_pos).y.atan2((target - new_pos).x) - s_next.yaw);
        let status = tracker.update(&new_pos, s_next.yaw);

        let e_next = wrapped_error(&s_next, &r);
        let nav_events = NavEvents {
            d_prev: d_before,
            d_now: d_after,
            reached: status.reached_now,
            t_reach: (step + 1) as f64 * dt,
            collided,
        };
        let reward = srl_agent::reward(
            &e_now,
            &e_next,
            &reward_patch.p,
            &nav_events,
            power,
            &cfg.reward,
        );

        let o_next = Observation {
            d_wp: d_after,
            psi_wp: psi_after,
            e: e_next,
        };
        if learn {
            buffer.store(ExperienceTuple {
                o: o_now,
                a: action.to_vector(),
                o_next,
                r: reward.total,
                source,
                step,
            });
            if step % cfg.agent.update_every == 0 {
                nets.learn_step(buffer, cfg.agent.batch);
            }
        }

        log.records.push(StepRecord {
            step,
            region,
            mode: cs.mode,
            source,
            e: e_now.0,
            action: action.to_vector(),
            reward,
            power,
        });
        log.summary.episode_return += reward.total;
        log.summary.total_energy += power * dt;
        log.summary.steps = step + 1;

        if collided {
            log.summary.collided = true;
            break;
        }
        if status.mission_complete {
            log.summary.mission_complete = true;
            break;
        }
        e_prev = Some(e_now);
    }

    log.summary.waypoints_reached = tracker.reached_count();
    log.summary.travel_time = log.summary.steps as f64 * dt;
    log.summary.avg_power = if log.summary.steps > 0 {
        log.summary.total_energy / (log.summary.steps as f64 * dt)
    } else {
        0.0
    };
    Ok(log)
}
