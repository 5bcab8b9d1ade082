use nalgebra::{SMatrix, SVector};
use srl_core::TrackingError;

/// Parameters a patch was synthesized with.
#[derive(Clone, Copy, Debug)]
pub struct PatchParams {
    pub alpha: f64,
    /// Split parameter actually used (retries may differ from the config).
    pub gamma: f64,
    pub kappa: f64,
    pub theta: f64,
    pub chi: f64,
}

/// Local safety certificate: a control goal, a stabilizing gain, and an
/// invariant ellipsoid `{e_hat : e_hat^T P e_hat <= 1}` that stays inside
/// the scaled constraint box while the commanded actions stay feasible.
#[derive(Clone, Debug)]
pub struct Patch {
    /// Control goal the teacher regulates toward.
    pub center: TrackingError,
    /// Feedback gain of the action policy.
    pub f_gain: SMatrix<f64, 6, 10>,
    /// Lyapunov matrix, `P = Q^{-1}`.
    pub p: SMatrix<f64, 10, 10>,
    /// Ellipsoid shape matrix (inverse of `p`).
    pub q: SMatrix<f64, 10, 10>,
    /// Slack bound on the input Gram matrix `F Q F^T` from the synthesis.
    pub t_bound: SMatrix<f64, 6, 6>,
    /// Steps the teacher holds control after the trigger.
    pub tau: usize,
    /// Step index at which the patch was created.
    pub created_at: usize,
    pub params_used: PatchParams,
}

impl Patch {
    /// Lyapunov value of a patch-relative error.
    pub fn level(&self, e: &TrackingError) -> f64 {
        let e_hat: SVector<f64, 10> = e.0 - self.center.0;
        (e_hat.transpose() * self.p * e_hat)[(0, 0)]
    }
}

/// Shrinks the triggering error toward the origin to produce the patch
/// center / real-time control goal.
pub fn patch_center(e_k: &TrackingError, chi: f64) -> TrackingError {
    assert!(chi > 0.0 && chi < 1.0, "chi must lie in (0, 1)");
    e_k.scaled(chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use srl_core::{membership, SpaceConfig};

    #[test]
    fn zero_error_centers_at_origin() {
        let c = patch_center(&TrackingError::zeroed(), 0.15);
        assert_eq!(c, TrackingError::zeroed());
    }

    #[test]
    fn center_is_shrunk_copy() {
        let mut e = TrackingError::zeroed();
        e.0[4] = 0.3;
        let c = patch_center(&e, 0.15);
        assert_relative_eq!(c.0[4], 0.045, epsilon = 1e-15);
    }

    #[test]
    fn boundary_trigger_center_lands_in_self_learning_set() {
        let cfg = SpaceConfig::default_experiment();
        let mut e = TrackingError::zeroed();
        e.0[4] = 0.4; // full safety boundary in forward velocity
        let c = patch_center(&e, cfg.chi);
        assert_relative_eq!(c.0[4], 0.06, epsilon = 1e-15);
        assert!(membership(&c, cfg.safety(), cfg.eta).unwrap());
    }
}
