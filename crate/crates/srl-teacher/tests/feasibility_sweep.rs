//! Boundary-trigger feasibility sweep: samples trigger errors on the
//! self-learning boundary, synthesizes a patch for each, and verifies the
//! certificate. Mirrors how triggers arise in closed loop.

use nalgebra::{SMatrix, SVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
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

/// Trigger error just past the self-learning boundary: uniform over the
/// boundary rectangle of the constrained coordinates, small Gaussian
/// components elsewhere.
pub fn sample_boundary_trigger(rng: &mut ChaCha8Rng, spaces: &SpaceConfig) -> TrackingError {
    let c = spaces.safety().bound();
    let eta = spaces.eta;
    let bx = eta * c[0] * 1.02; // vx half-width, just outside
    let by = eta * c[1] * 1.02; // h half-width
    let mut e = SVector::<f64, 10>::zeros();
    // Walk the rectangle perimeter by arc length.
    let perim = 4.0 * (bx + by);
    let s = rng.random::<f64>() * perim;
    let (evx, eh) = if s < 2.0 * bx {
        (s - bx, by)
    } else if s < 2.0 * (bx + by) {
        (bx, s - 2.0 * bx - by)
    } else if s < 4.0 * bx + 2.0 * by {
        (s - (2.0 * bx + 2.0 * by) - bx, -by)
    } else {
        (-bx, s - (4.0 * bx + 2.0 * by) - by)
    };
    e[4] = evx;
    e[0] = eh;
    for i in [1usize, 2, 3, 5, 6, 7, 8, 9] {
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random();
        let n = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        e[i] = 0.03 * n;
    }
    TrackingError(e)
}

#[test]
fn boundary_triggers_are_feasible_and_verified_at_20hz() {
    sweep(0.05);
}

#[test]
fn boundary_triggers_are_feasible_and_verified_at_10hz() {
    sweep(0.1);
}

fn sweep(dt: f64) {
    let spaces = SpaceConfig::default_experiment();
    let cfg = TeacherConfig::default();
    let (a, b) = nominal_model(dt);
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    let mut feasible = 0;
    let mut last_patch = None;
    let mut worst_ms = 0.0f64;
    let start = std::time::Instant::now();
    let total = 100;
    for _ in 0..total {
        let e_k = sample_boundary_trigger(&mut rng, &spaces);
        let t0 = std::time::Instant::now();
        match synthesize_with_retry(&e_k, &cfg, &spaces, (&a, &b), 0) {
            Ok(patch) => {
                let ms = t0.elapsed().as_secs_f64() * 1e3;
                worst_ms = worst_ms.max(ms);
                let report = verify_patch(&patch, &e_k, &spaces, (&a, &b));
                assert!(
                    report.passes(1e-7, cfg.alpha),
                    "certificate failed at {e_k:?}: {report}"
                );
                feasible += 1;
                last_patch = Some(patch);
            }
            Err(e) => eprintln!("infeasible trigger {e_k:?}: {e}"),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    eprintln!(
        "feasible {feasible}/{total}, total {elapsed:.2}s, worst solve {worst_ms:.0}ms"
    );
    assert!(feasible >= 95, "only {feasible}/{total} feasible");
    assert!(worst_ms < 2000.0, "worst solve {worst_ms:.0}ms exceeded 2 s");
}
