//! End-to-end synthesis tests at the experiment configuration: solve the
//! five-inequality system at the nominal state, then verify every
//! certificate property with independent eigenvalue checks.

use nalgebra::{SMatrix, SVector};
use srl_core::{membership, SpaceConfig, TrackingError};
use srl_teacher::{
    synthesize, synthesize_with_retry, teacher_action, verify_patch, ContainmentMode,
    TeacherConfig,
};

/// Nominal model at the experiment state (h = 0.3, vx = 0.4, zero
/// attitude) with a 10 Hz sampling period: attitude rates decouple to
/// identity, so the blocks can be written down directly.
fn nominal_model(dt: f64) -> (SMatrix<f64, 10, 10>, SMatrix<f64, 10, 6>) {
    let mut a = SMatrix::<f64, 10, 10>::identity();
    a[(0, 6)] = dt;
    for i in 0..3 {
        a[(1 + i, 7 + i)] = dt;
    }
    let mut b = SMatrix::<f64, 10, 6>::zeros();
    for i in 0..3 {
        b[(4 + i, i)] = dt;
        b[(7 + i, 3 + i)] = dt;
    }
    (a, b)
}

fn boundary_trigger(vx_sign: f64) -> TrackingError {
    let mut e = SVector::<f64, 10>::zeros();
    e[4] = vx_sign * 0.7 * 0.4 * 1.02; // just past the self-learning band
    TrackingError(e)
}

#[test]
fn nominal_synthesis_passes_full_certificate() {
    let spaces = SpaceConfig::default_experiment();
    let cfg = TeacherConfig::default();
    let (a, b) = nominal_model(0.1);
    let e_k = boundary_trigger(-1.0);

    let start = std::time::Instant::now();
    let patch = synthesize(&e_k, &cfg, &spaces, (&a, &b), 0).expect("feasible");
    let elapsed = start.elapsed();
    eprintln!("synthesis took {elapsed:?}");
    assert!(elapsed.as_secs_f64() < 2.0, "solve exceeded 2 s");

    let report = verify_patch(&patch, &e_k, &spaces, (&a, &b));
    eprintln!("{report}");
    assert!(report.passes(1e-7, cfg.alpha), "certificate failed: {report}");
    assert_eq!(patch.tau, 10);
}

#[test]
fn contraction_holds_strictly_below_alpha() {
    let spaces = SpaceConfig::default_experiment();
    let cfg = TeacherConfig::default();
    let (a, b) = nominal_model(0.1);
    let e_k = boundary_trigger(1.0);
    let patch = synthesize(&e_k, &cfg, &spaces, (&a, &b), 0).expect("feasible");
    let report = verify_patch(&patch, &e_k, &spaces, (&a, &b));
    assert!(
        report.contraction_eig < cfg.alpha + 1e-8,
        "contraction eigenvalue {} not below alpha",
        report.contraction_eig
    );
}

#[test]
fn ellipsoid_boundary_actions_stay_feasible() {
    // Closed-form support value: max_j sqrt(D_j F Q F^T D_j^T) / d_j <= 1
    // means the policy cannot leave the action box inside the ellipsoid.
    let spaces = SpaceConfig::default_experiment();
    let cfg = TeacherConfig::default();
    let (a, b) = nominal_model(0.1);
    let e_k = boundary_trigger(-1.0);
    let patch = synthesize(&e_k, &cfg, &spaces, (&a, &b), 0).expect("feasible");
    let report = verify_patch(&patch, &e_k, &spaces, (&a, &b));
    assert!(report.input_sup <= 1.0 + 1e-9);

    // Worst direction for the first action row: e_hat = Q F^T D_1^T / sup.
    let d1 = patch.f_gain.row(0).transpose();
    let dir = patch.q * d1;
    let level = (dir.transpose() * patch.p * dir)[(0, 0)];
    let e_boundary = TrackingError(patch.center.0 + dir / level.sqrt());
    let cmd = teacher_action(&patch, &e_boundary, spaces.actions());
    assert!(!cmd.out_of_certificate);
    assert!(srl_core::action_in_bounds(&cmd.action, spaces.actions()).unwrap());
}

#[test]
fn nominal_closed_loop_returns_to_self_learning_set() {
    // Mismatch-free closed loop from the trigger: after tau steps the
    // total error must be back in the self-learning set.
    let spaces = SpaceConfig::default_experiment();
    let cfg = TeacherConfig::default();
    let (a, b) = nominal_model(0.1);
    let e_k = boundary_trigger(-1.0);
    let patch = synthesize(&e_k, &cfg, &spaces, (&a, &b), 0).expect("feasible");

    let closed = a + b * patch.f_gain;
    let mut e_hat = e_k.0 - patch.center.0;
    for _ in 0..patch.tau {
        e_hat = closed * e_hat;
    }
    let e_final = TrackingError(e_hat + patch.center.0);
    assert!(
        membership(&e_final, spaces.safety(), spaces.eta).unwrap(),
        "closed loop did not return to the self-learning set: {:?}",
        e_final
    );
}

#[test]
fn patch_box_around_center_stays_safe_for_band_triggers() {
    // theta + chi * eta < 1 makes the whole patch box safe when the
    // trigger sits on the self-learning boundary; check the box corners
    // in the constrained coordinates.
    let spaces = SpaceConfig::default_experiment();
    let mut e = SVector::<f64, 10>::zeros();
    e[4] = 0.7 * 0.4;
    e[0] = 0.7 * 0.15;
    let e_k = TrackingError(e);
    let center = srl_teacher::patch_center(&e_k, spaces.chi);
    let c = spaces.safety().bound();
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            let mut corner = center.0;
            corner[4] += sx * spaces.theta * c[0];
            corner[0] += sy * spaces.theta * c[1];
            let inside = membership(&TrackingError(corner), spaces.safety(), 1.0).unwrap();
            assert!(inside, "patch box corner left the safety set");
        }
    }
}

#[test]
fn printed_diag_mode_conflicts_on_band_triggers_but_allows_small_ones() {
    let spaces = SpaceConfig::default_experiment();
    let cfg = TeacherConfig {
        containment: ContainmentMode::PrintedDiag,
        ..TeacherConfig::default()
    };
    let (a, b) = nominal_model(0.1);

    // The diagonal form demands Q entries larger than box containment
    // permits for a boundary trigger.
    let res = synthesize(&boundary_trigger(-1.0), &cfg, &spaces, (&a, &b), 0);
    assert!(res.is_err(), "diag containment unexpectedly feasible");

    // A small trigger fits.
    let mut e = SVector::<f64, 10>::zeros();
    e[4] = 0.05;
    let res = synthesize(&TrackingError(e), &cfg, &spaces, (&a, &b), 0);
    assert!(res.is_ok(), "diag containment failed on a small trigger: {res:?}");
}

#[test]
fn retry_path_returns_first_feasible_gamma() {
    let spaces = SpaceConfig::default_experiment();
    let cfg = TeacherConfig::default();
    let (a, b) = nominal_model(0.1);
    let patch = synthesize_with_retry(&boundary_trigger(1.0), &cfg, &spaces, (&a, &b), 7)
        .expect("feasible");
    assert_eq!(patch.created_at, 7);
    assert_eq!(patch.params_used.gamma, cfg.gamma);
}

#[test]
fn warm_started_synthesis_is_faster_and_consistent() {
    let spaces = SpaceConfig::default_experiment();
    let cfg = TeacherConfig::default();
    let (a, b) = nominal_model(0.1);
    let e1 = boundary_trigger(-1.0);
    let patch = synthesize(&e1, &cfg, &spaces, (&a, &b), 0).expect("feasible");

    let mut e2 = e1;
    e2.0[4] *= 0.98;
    e2.0[0] = 0.02;
    let warm = synthesize(&e2, &cfg, &spaces, (&a, &b), 1).expect("feasible");
    let report = verify_patch(&warm, &e2, &spaces, (&a, &b));
    assert!(report.passes(1e-7, cfg.alpha), "warm-started patch failed: {report}");
}
