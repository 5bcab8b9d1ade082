use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};
use srl_core::RobotState;

use crate::{AMatrix, BMatrix};

/// Physical and numerical parameters of the plant.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantParams {
    /// Sampling period (s).
    pub dt: f64,
    /// Robot mass (kg).
    pub mass: f64,
    /// Diagonal body inertia (kg m^2).
    pub inertia_diag: [f64; 3],
    /// Dimensionless amplitude of the state-dependent model mismatch.
    pub mismatch_gain: f64,
    /// Seed for the optional state-reading noise.
    pub noise_seed: u64,
    /// Standard deviation of additive state-reading noise (0 disables it).
    pub sensor_noise_std: f64,
    /// CoM height of the mismatch operating point (m).
    pub op_height: f64,
    /// Copper-loss coefficient of the motor power proxy.
    pub copper_loss: f64,
    /// Stance-balance righting reflex: attitude deadband (rad) beyond
    /// which the low-level layer rights the body. Zero inside the
    /// deadband, so certified patches never see it.
    pub righting_attitude_deadband: f64,
    /// Angular-rate deadband (rad/s) of the righting reflex.
    pub righting_rate_deadband: f64,
    /// Velocity deadband (m/s) beyond which stance friction drags the
    /// CoM velocity back; certified ellipsoids stay well inside it.
    pub drag_velocity_deadband: f64,
    /// Righting gain (1/s^2 on attitude excess, 1/s on rate excess);
    /// zero disables the reflex.
    pub righting_gain: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            // 20 Hz control keeps the synthesized gains within the action
            // box for boundary triggers while per-step state motion stays
            // small against the margin band.
            dt: 0.05,
            mass: 15.0,
            inertia_diag: [0.1, 0.25, 0.3],
            mismatch_gain: 0.05,
            noise_seed: 0,
            sensor_noise_std: 0.0,
            op_height: 0.3,
            copper_loss: 0.05,
            righting_attitude_deadband: 0.6,
            righting_rate_deadband: 1.2,
            drag_velocity_deadband: 2.0,
            righting_gain: 6.0,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0) {
            return Err(format!("dt = {} must be positive", self.dt));
        }
        if !(self.mass > 0.0) {
            return Err("mass must be positive".into());
        }
        if self.inertia_diag.iter().any(|i| !(*i > 0.0)) {
            return Err("inertia entries must be positive".into());
        }
        if self.mismatch_gain < 0.0 {
            return Err("mismatch_gain must be nonnegative".into());
        }
        Ok(())
    }
}

/// Euler-rate matrix mapping world-frame angular velocity to Euler angle
/// rates for the roll-pitch-yaw convention. Roll drops out; the matrix is
/// singular at pitch = +-pi/2, which the pitch clamp keeps away.
pub fn euler_rate_matrix(pitch: f64, yaw: f64) -> SMatrix<f64, 3, 3> {
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    let tt = sp / cp;
    SMatrix::<f64, 3, 3>::new(
        cy / cp,
        sy / cp,
        0.0,
        -sy,
        cy,
        0.0,
        cy * tt,
        sy * tt,
        1.0,
    )
}

/// Nominal model evaluated at a state.
#[derive(Clone, Debug)]
pub struct NominalModel {
    pub a: AMatrix,
    pub b: BMatrix,
    /// Set when pitch had to be clamped away from the Euler-rate
    /// singularity before building the model.
    pub pitch_clamped: bool,
}

/// Discrete-time nominal model `(A(s), B)`.
///
/// `A` is identity except the height row integrates vertical velocity and
/// the attitude rows integrate angular velocity through the Euler-rate
/// matrix frozen at `s`. `B` injects the commanded accelerations into the
/// velocity and angular-velocity rows with gain `dt`.
pub fn nominal_model(s: &RobotState, params: &PlantParams) -> NominalModel {
    let t = params.dt;
    let mut state = *s;
    let pitch_clamped = state.clamp_pitch();

    let mut a = AMatrix::identity();
    a[(0, 6)] = t; // h <- h + dt * vz
    let e = euler_rate_matrix(state.pitch, state.yaw);
    for i in 0..3 {
        for j in 0..3 {
            a[(1 + i, 7 + j)] = t * e[(i, j)];
        }
    }

    let mut b = BMatrix::zeros();
    for i in 0..3 {
        b[(4 + i, i)] = t; // a_v -> v
        b[(7 + i, 3 + i)] = t; // a_w -> w
    }

    NominalModel {
        a,
        b,
        pitch_clamped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix3, Vector3};

    /// Independent Euler-kinematics oracle: builds the matrix that maps
    /// Euler angle rates to world angular velocity from the rotation
    /// frame axes and inverts it numerically.
    fn euler_rate_oracle(pitch: f64, yaw: f64) -> Matrix3<f64> {
        let rz = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), yaw);
        let ry = nalgebra::Rotation3::from_axis_angle(&Vector3::y_axis(), pitch);
        let col1 = rz * ry * Vector3::x();
        let col2 = rz * Vector3::y();
        let col3 = Vector3::z();
        let m = Matrix3::from_columns(&[col1, col2, col3]);
        m.try_inverse().expect("nonsingular away from pitch = pi/2")
    }

    #[test]
    fn zero_attitude_gives_identity_euler_rates() {
        let e = euler_rate_matrix(0.0, 0.0);
        assert_relative_eq!((e - Matrix3::identity()).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn euler_rates_match_numeric_oracle() {
        for &(pitch, yaw) in &[
            (0.0, std::f64::consts::FRAC_PI_2),
            (0.2, -0.7),
            (-0.4, 2.4),
            (1.0, 0.3),
        ] {
            let e = euler_rate_matrix(pitch, yaw);
            let oracle = euler_rate_oracle(pitch, yaw);
            assert_relative_eq!((e - oracle).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn a_matrix_has_printed_block_structure() {
        let params = PlantParams {
            dt: 0.01,
            ..PlantParams::default()
        };
        let mut s = RobotState::zeroed();
        s.h = 0.3;
        s.vx = 0.4;
        let m = nominal_model(&s, &params);
        assert!(!m.pitch_clamped);
        // First block row: [1, 0 x5, T, 0 x3].
        assert_relative_eq!(m.a[(0, 0)], 1.0);
        assert_relative_eq!(m.a[(0, 6)], 0.01);
        for j in 1..6 {
            assert_relative_eq!(m.a[(0, j)], 0.0);
        }
        // Zero attitude: attitude/angular-rate block is T * I3.
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.01 } else { 0.0 };
                assert_relative_eq!(m.a[(1 + i, 7 + j)], want, epsilon = 1e-15);
            }
        }
        // B: only the two dt*I3 blocks are nonzero.
        let mut expect = BMatrix::zeros();
        for i in 0..3 {
            expect[(4 + i, i)] = 0.01;
            expect[(7 + i, 3 + i)] = 0.01;
        }
        assert_relative_eq!((m.b - expect).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn attitude_coupling_uses_euler_rates_at_quarter_turn() {
        let params = PlantParams {
            dt: 0.01,
            ..PlantParams::default()
        };
        let mut s = RobotState::zeroed();
        s.yaw = std::f64::consts::FRAC_PI_2;
        let m = nominal_model(&s, &params);
        let oracle = euler_rate_oracle(0.0, std::f64::consts::FRAC_PI_2);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(m.a[(1 + i, 7 + j)], 0.01 * oracle[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn extreme_pitch_is_clamped_with_flag() {
        let mut s = RobotState::zeroed();
        s.pitch = 2.0;
        let m = nominal_model(&s, &PlantParams::default());
        assert!(m.pitch_clamped);
        assert!(m.a.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn params_validate() {
        assert!(PlantParams::default().validate().is_ok());
        assert!(PlantParams {
            dt: 0.0,
            ..PlantParams::default()
        }
        .validate()
        .is_err());
    }
}
