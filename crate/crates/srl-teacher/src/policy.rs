use srl_core::{Action, PolytopeBox, TrackingError};

use crate::Patch;

/// Action decided by the teacher, with a flag raised when the error was
/// outside the certified ellipsoid and the command had to be clamped.
#[derive(Clone, Copy, Debug)]
pub struct TeacherCommand {
    pub action: Action,
    pub out_of_certificate: bool,
}

/// Largest axis-aligned box inscribed in the action polytope.
fn inscribed_box(actions: &PolytopeBox) -> nalgebra::SVector<f64, 6> {
    let d_mat = actions.mat();
    let d_vec = actions.bound();
    let mut scale = nalgebra::SVector::<f64, 6>::from_element(f64::INFINITY);
    for j in 0..actions.dim() {
        for i in 0..d_mat.nrows() {
            let w = d_mat[(i, j)].abs();
            if w > 1e-12 {
                scale[j] = scale[j].min(d_vec[i] / w);
            }
        }
        if !scale[j].is_finite() {
            scale[j] = 1.0;
        }
    }
    let mut shrink = 1.0f64;
    for i in 0..d_mat.nrows() {
        let mut row_sum = 0.0;
        for j in 0..actions.dim() {
            row_sum += d_mat[(i, j)].abs() * scale[j];
        }
        if row_sum > d_vec[i] {
            shrink = shrink.min(d_vec[i] / row_sum);
        }
    }
    scale * shrink
}

/// Linear feedback about the patch center: `a = F (e - e*)`.
///
/// Inside the certified ellipsoid the command is feasible by
/// construction and returned as computed. Outside the ellipsoid the
/// command is clamped per axis into the box inscribed in the action set,
/// which keeps every axis of the rescue response at full authority, and
/// the out-of-certificate flag is raised.
pub fn teacher_action(patch: &Patch, e_t: &TrackingError, actions: &PolytopeBox) -> TeacherCommand {
    let e_hat = e_t.0 - patch.center.0;
    let raw = patch.f_gain * e_hat;
    let level = (e_hat.transpose() * patch.p * e_hat)[(0, 0)];
    let mut action = Action::from_vector(&raw);
    let mut out_of_certificate = false;

    if level > 1.0 + 1e-9 {
        out_of_certificate = true;
        let limits = inscribed_box(actions);
        let mut clamped = raw;
        for j in 0..6 {
            clamped[j] = clamped[j].clamp(-limits[j], limits[j]);
        }
        action = Action::from_vector(&clamped);
    } else {
        debug_assert!(
            srl_core::action_in_bounds(&action, actions).unwrap_or(false),
            "certified action left the action box"
        );
    }
    TeacherCommand {
        action,
        out_of_certificate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SMatrix;
    use srl_core::SpaceConfig;

    use crate::PatchParams;

    fn dummy_patch(f: SMatrix<f64, 6, 10>) -> Patch {
        Patch {
            center: TrackingError::zeroed(),
            f_gain: f,
            p: SMatrix::identity(),
            q: SMatrix::identity(),
            t_bound: SMatrix::identity(),
            tau: 8,
            created_at: 0,
            params_used: PatchParams {
                alpha: 0.8,
                gamma: 1.0,
                kappa: 0.01,
                theta: 0.87,
                chi: 0.15,
            },
        }
    }

    #[test]
    fn zero_error_gives_zero_action() {
        let spaces = SpaceConfig::default_experiment();
        let patch = dummy_patch(SMatrix::repeat(0.3));
        let cmd = teacher_action(&patch, &TrackingError::zeroed(), spaces.actions());
        assert_eq!(cmd.action, Action::zeroed());
        assert!(!cmd.out_of_certificate);
    }

    #[test]
    fn zero_gain_gives_zero_action() {
        let spaces = SpaceConfig::default_experiment();
        let patch = dummy_patch(SMatrix::zeros());
        let mut e = TrackingError::zeroed();
        e.0[4] = 0.5;
        let cmd = teacher_action(&patch, &e, spaces.actions());
        assert_eq!(cmd.action, Action::zeroed());
    }

    #[test]
    fn outside_ellipsoid_is_clamped_and_flagged() {
        let spaces = SpaceConfig::default_experiment();
        let patch = dummy_patch(SMatrix::repeat(30.0));
        let mut e = TrackingError::zeroed();
        e.0[4] = 2.0; // level 4 > 1
        let cmd = teacher_action(&patch, &e, spaces.actions());
        assert!(cmd.out_of_certificate);
        assert!(srl_core::action_in_bounds(&cmd.action, spaces.actions()).unwrap());
    }
}
