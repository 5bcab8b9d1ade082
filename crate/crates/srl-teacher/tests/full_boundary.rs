//! Synthesis at the full safety-boundary trigger (the episode-start
//! condition when the robot begins at rest).

use nalgebra::{SMatrix, SVector};
use srl_core::{SpaceConfig, TrackingError};
use srl_teacher::{synthesize_with_retry, verify_patch, TeacherConfig};

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

#[test]
fn rest_start_trigger_synthesizes() {
    let spaces = SpaceConfig::default_experiment();
    let cfg = TeacherConfig::default();
    let (a, b) = nominal_model(0.05);
    let mut e = SVector::<f64, 10>::zeros();
    e[4] = -0.4; // stationary robot against the cruise command
    let e_k = TrackingError(e);
    match synthesize_with_retry(&e_k, &cfg, &spaces, (&a, &b), 0) {
        Ok(patch) => {
            let report = verify_patch(&patch, &e_k, &spaces, (&a, &b));
            eprintln!("{report}");
            assert!(report.passes(1e-7, cfg.alpha), "certificate failed: {report}");
        }
        Err(e) => panic!("full-boundary trigger infeasible: {e}"),
    }
}
