use nalgebra::SVector;
use srl_core::{Action, RobotState};

use crate::PlantParams;

/// Non-regenerative motor power proxy for the reduced-order model.
///
/// Generalized effort `w = (mass * a_v, inertia .* a_w)` against the
/// generalized velocity `(v, w)`, plus a copper-loss term, clamped at
/// zero from below (braking returns no energy). Result in watts.
pub fn proxy_power(a: &Action, s: &RobotState, params: &PlantParams) -> f64 {
    let w: SVector<f64, 6> = SVector::from([
        params.mass * a.av[0],
        params.mass * a.av[1],
        params.mass * a.av[2],
        params.inertia_diag[0] * a.aw[0],
        params.inertia_diag[1] * a.aw[1],
        params.inertia_diag[2] * a.aw[2],
    ]);
    let v_gen: SVector<f64, 6> = SVector::from([s.vx, s.vy, s.vz, s.wx, s.wy, s.wz]);
    (w.dot(&v_gen) + params.copper_loss * w.norm_squared()).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_action_draws_no_power() {
        let mut s = RobotState::zeroed();
        s.vx = 1.0;
        assert_eq!(proxy_power(&Action::zeroed(), &s, &PlantParams::default()), 0.0);
    }

    #[test]
    fn scalar_case_matches_hand_value() {
        // Unit effort against 2 m/s with copper loss 0.5: 1*2 + 0.5*1 = 2.5 W.
        let params = PlantParams {
            mass: 1.0,
            copper_loss: 0.5,
            ..PlantParams::default()
        };
        let mut s = RobotState::zeroed();
        s.vx = 2.0;
        let mut a = Action::zeroed();
        a.av[0] = 1.0;
        assert_relative_eq!(proxy_power(&a, &s, &params), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn braking_clamps_to_zero() {
        // Effort opposing motion with small copper loss: output clamps at 0.
        let params = PlantParams {
            mass: 1.0,
            copper_loss: 0.04,
            ..PlantParams::default()
        };
        let mut s = RobotState::zeroed();
        s.vx = 1.0;
        let mut a = Action::zeroed();
        a.av[0] = -5.0; // w*v = -5, loss = 0.04*25 = 1
        assert_eq!(proxy_power(&a, &s, &params), 0.0);
    }

    #[test]
    fn power_is_never_negative() {
        let params = PlantParams::default();
        for k in 0..200 {
            let x = (k as f64) * 0.37;
            let mut s = RobotState::zeroed();
            s.vx = (x * 1.3).sin() * 2.0;
            s.wz = (x * 0.7).cos();
            let mut a = Action::zeroed();
            a.av[0] = (x * 2.1).sin() * 10.0;
            a.aw[2] = (x * 1.1).cos() * 20.0;
            assert!(proxy_power(&a, &s, &params) >= 0.0);
        }
    }
}
