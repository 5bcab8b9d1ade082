use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::{ActionVec, StateVec};

/// Dimension of the reduced-order robot state.
pub const STATE_DIM: usize = 10;
/// Dimension of the acceleration command.
pub const ACTION_DIM: usize = 6;

/// Pitch is kept away from the Euler-rate singularity at +-pi/2.
pub const PITCH_LIMIT: f64 = std::f64::consts::FRAC_PI_2 - 0.01;

/// Reduced-order robot state: CoM height, Euler attitude, world-frame CoM
/// velocity, and world-frame angular velocity.
///
/// Vector layout (used consistently by every crate):
/// `[h, roll, pitch, yaw, vx, vy, vz, wx, wy, wz]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    /// CoM height (m).
    pub h: f64,
    /// Euler roll angle (rad).
    pub roll: f64,
    /// Euler pitch angle (rad); clamped to `|pitch| <= PITCH_LIMIT`.
    pub pitch: f64,
    /// Euler yaw angle (rad).
    pub yaw: f64,
    /// World-frame CoM velocity (m/s).
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    /// World-frame angular velocity (rad/s).
    pub wx: f64,
    pub wy: f64,
    pub wz: f64,
}

impl RobotState {
    pub fn zeroed() -> Self {
        Self::from_vector(&StateVec::zeros())
    }

    pub fn to_vector(&self) -> StateVec {
        SVector::from([
            self.h, self.roll, self.pitch, self.yaw, self.vx, self.vy, self.vz, self.wx, self.wy,
            self.wz,
        ])
    }

    pub fn from_vector(v: &StateVec) -> Self {
        Self {
            h: v[0],
            roll: v[1],
            pitch: v[2],
            yaw: v[3],
            vx: v[4],
            vy: v[5],
            vz: v[6],
            wx: v[7],
            wy: v[8],
            wz: v[9],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }

    /// Clamps pitch into the nonsingular range. Returns true when clamping
    /// actually changed the value.
    pub fn clamp_pitch(&mut self) -> bool {
        let clamped = self.pitch.clamp(-PITCH_LIMIT, PITCH_LIMIT);
        let changed = clamped != self.pitch;
        self.pitch = clamped;
        changed
    }
}

/// Tracking error `e = s - r` with the same layout and units as
/// [`RobotState`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackingError(pub StateVec);

impl TrackingError {
    pub fn zeroed() -> Self {
        Self(StateVec::zeros())
    }

    pub fn from_states(s: &RobotState, r: &RobotState) -> Self {
        Self(s.to_vector() - r.to_vector())
    }

    pub fn as_vector(&self) -> &StateVec {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Height error component.
    pub fn e_h(&self) -> f64 {
        self.0[0]
    }

    /// Forward-velocity error component.
    pub fn e_vx(&self) -> f64 {
        self.0[4]
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self(self.0 * k)
    }
}

impl std::ops::Sub for TrackingError {
    type Output = TrackingError;
    fn sub(self, rhs: TrackingError) -> TrackingError {
        TrackingError(self.0 - rhs.0)
    }
}

/// Acceleration command: linear part (m/s^2) and angular part (rad/s^2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Action {
    pub av: SVector<f64, 3>,
    pub aw: SVector<f64, 3>,
}

impl Action {
    pub fn zeroed() -> Self {
        Self {
            av: SVector::zeros(),
            aw: SVector::zeros(),
        }
    }

    pub fn from_vector(v: &ActionVec) -> Self {
        Self {
            av: SVector::from([v[0], v[1], v[2]]),
            aw: SVector::from([v[3], v[4], v[5]]),
        }
    }

    pub fn to_vector(&self) -> ActionVec {
        SVector::from([
            self.av[0], self.av[1], self.av[2], self.aw[0], self.aw[1], self.aw[2],
        ])
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }
}
