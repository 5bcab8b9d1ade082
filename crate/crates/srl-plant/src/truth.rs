use nalgebra::Vector2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srl_core::{Action, RobotState, StateVec};

use crate::model::euler_rate_matrix;
use crate::{PlantError, PlantParams, WorldModel};

/// Saturation scale of the mismatch profile (kept well above realistic
/// state deviations so the map stays in its near-linear regime).
const MISMATCH_SAT: f64 = 10.0;

/// Smooth state-dependent model mismatch, evaluated on a deviation vector.
///
/// The map is radial: `g(x) = gain * dt * sat * tanh(|x|/sat) * x/|x|`.
/// Shrinking along the ray keeps the map contractive in any quadratic
/// norm, which is what the Lipschitz bound on the mismatch requires.
pub fn mismatch_delta(params: &PlantParams, dev: &StateVec) -> StateVec {
    let r = dev.norm();
    if r < 1e-300 {
        return StateVec::zeros();
    }
    let mag = MISMATCH_SAT * (r / MISMATCH_SAT).tanh();
    dev * (params.mismatch_gain * params.dt * mag / r)
}

/// One step of the ground-truth dynamics.
///
/// Uses exact Euler kinematics at the current state (the nominal model
/// freezes them at the linearization state), applies terrain friction to
/// the commanded linear acceleration, and adds the mismatch term.
pub fn step_truth(
    s: &RobotState,
    a: &Action,
    world: &WorldModel,
    pos_xy: &Vector2<f64>,
    params: &PlantParams,
) -> Result<RobotState, PlantError> {
    if !a.is_finite() {
        return Err(PlantError::NonFiniteAction);
    }
    let t = params.dt;
    let mut state = *s;
    state.clamp_pitch();

    let mu = world.friction_scale_at(pos_xy);
    let e = euler_rate_matrix(state.pitch, state.yaw);
    let omega = nalgebra::Vector3::new(state.wx, state.wy, state.wz);
    let theta_dot = e * omega;

    // Stance-balance righting reflex of the low-level layer: rights the
    // body only beyond the attitude/rate deadbands, so it is identically
    // zero in the certified operating region.
    let deadband_excess = |x: f64, band: f64| x - x.clamp(-band, band);
    let k = params.righting_gain;
    let att_db = params.righting_attitude_deadband;
    let rate_db = params.righting_rate_deadband;
    let righting = [
        -k * deadband_excess(state.roll, att_db) - k * deadband_excess(state.wx, rate_db),
        -k * deadband_excess(state.pitch, att_db) - k * deadband_excess(state.wy, rate_db),
        -k * deadband_excess(state.wz, rate_db),
    ];
    let vel_db = params.drag_velocity_deadband;
    let drag = [
        -k * deadband_excess(state.vx, vel_db),
        -k * deadband_excess(state.vy, vel_db),
        -k * deadband_excess(state.vz, vel_db),
    ];

    let mut next = state;
    next.h += t * state.vz;
    next.roll += t * theta_dot[0];
    next.pitch += t * theta_dot[1];
    next.yaw += t * theta_dot[2];
    next.vx += t * (mu * a.av[0] + drag[0]);
    next.vy += t * (mu * a.av[1] + drag[1]);
    next.vz += t * (mu * a.av[2] + drag[2]);
    next.wx += t * (a.aw[0] + righting[0]);
    next.wy += t * (a.aw[1] + righting[1]);
    next.wz += t * (a.aw[2] + righting[2]);

    if params.mismatch_gain > 0.0 {
        let mut op = StateVec::zeros();
        op[0] = params.op_height;
        let dev = state.to_vector() - op;
        let g = mismatch_delta(params, &dev);
        let v = next.to_vector() + g;
        next = RobotState::from_vector(&v);
    }
    next.clamp_pitch();

    if !next.is_finite() {
        return Err(PlantError::NonFiniteState);
    }
    Ok(next)
}

/// Reads the plant state, optionally with additive Gaussian noise (the
/// stand-in for state estimation).
pub fn read_state(s: &RobotState, params: &PlantParams, rng: &mut ChaCha8Rng) -> RobotState {
    if params.sensor_noise_std <= 0.0 {
        return *s;
    }
    let mut v = s.to_vector();
    for x in v.iter_mut() {
        // Box-Muller keeps the dependency surface small.
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        let n = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        *x += params.sensor_noise_std * n;
    }
    RobotState::from_vector(&v)
}

/// Owns the mutable episode state: robot state plus planar position
/// integrated from the CoM velocity. One instance per episode.
#[derive(Clone, Debug)]
pub struct Plant {
    pub state: RobotState,
    pub pos: Vector2<f64>,
    pub params: PlantParams,
    noise_rng: ChaCha8Rng,
}

impl Plant {
    pub fn new(state: RobotState, pos: Vector2<f64>, params: PlantParams) -> Self {
        let noise_rng = ChaCha8Rng::seed_from_u64(params.noise_seed);
        Self {
            state,
            pos,
            params,
            noise_rng,
        }
    }

    /// Advances one step and integrates the planar position.
    pub fn step(&mut self, a: &Action, world: &WorldModel) -> Result<(), PlantError> {
        let next = step_truth(&self.state, a, world, &self.pos, &self.params)?;
        self.pos.x += self.params.dt * self.state.vx;
        self.pos.y += self.params.dt * self.state.vy;
        self.state = next;
        Ok(())
    }

    /// State as observed (noisy when configured).
    pub fn observe(&mut self) -> RobotState {
        read_state(&self.state, &self.params, &mut self.noise_rng)
    }
}
