use nalgebra::{DMatrix, SMatrix};
use srl_core::{SpaceConfig, TrackingError};
use srl_lmi::{
    solve_feasibility, AffineTerm, Constraint, LmiProblem, SolveStatus, VarShape,
};
use thiserror::Error;

use crate::horizon::teaching_horizon;
use crate::patch::{patch_center, Patch, PatchParams};
use crate::{ContainmentMode, TeacherConfig};

#[derive(Debug, Error)]
pub enum SynthesisFailure {
    #[error("synthesis precondition violated: {0}")]
    Precondition(String),
    #[error("synthesis infeasible (max violation {max_violation:.3e} after {iterations} iterations)")]
    Infeasible { max_violation: f64, iterations: usize },
    #[error("solver budget exhausted (max violation {max_violation:.3e})")]
    Budget { max_violation: f64 },
    #[error("solution is numerically degenerate: {0}")]
    Degenerate(String),
}

/// Embedding matrix placing an `inner`-dimensional block at `row_off`
/// inside an `outer`-dimensional constraint.
fn embed(outer: usize, inner: usize, row_off: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(outer, inner);
    for i in 0..inner {
        m[(row_off + i, i)] = 1.0;
    }
    m
}

/// Characteristic per-axis scales of the state and action coordinates,
/// derived from the constraint boxes. The synthesis problem is solved in
/// these normalized coordinates (an exact congruence transform), which
/// keeps every LMI block O(1) and conditions the projection solver.
fn axis_scales(spaces: &SpaceConfig) -> (SMatrix<f64, 10, 10>, SMatrix<f64, 6, 6>) {
    let c_mat = spaces.safety().mat();
    let c_vec = spaces.safety().bound();
    let mut sc = SMatrix::<f64, 10, 10>::identity() * 0.5;
    for i in 0..10 {
        let mut best = f64::INFINITY;
        for r in 0..c_mat.nrows() {
            let w = c_mat[(r, i)].abs();
            if w > 1e-12 {
                best = best.min(c_vec[r] / w);
            }
        }
        if best.is_finite() {
            sc[(i, i)] = best;
        }
    }
    let d_mat = spaces.actions().mat();
    let d_vec = spaces.actions().bound();
    let mut sd = SMatrix::<f64, 6, 6>::identity();
    for j in 0..6 {
        let mut best = f64::INFINITY;
        for r in 0..d_mat.nrows() {
            let w = d_mat[(r, j)].abs();
            if w > 1e-12 {
                best = best.min(d_vec[r] / w);
            }
        }
        if best.is_finite() {
            sd[(j, j)] = best;
        }
    }
    (sc, sd)
}

/// Builds the five-inequality feasibility problem behind a patch:
/// slack coupling, box containment of the ellipsoid, action containment,
/// initial-state containment, and the robust one-step contraction block.
///
/// Variables: `Q` (10x10 symmetric), `R` (6x10), `T` (6x6 symmetric).
pub fn build_synthesis_problem(
    a: &SMatrix<f64, 10, 10>,
    b: &SMatrix<f64, 10, 6>,
    e_hat: &TrackingError,
    spaces: &SpaceConfig,
    cfg: &TeacherConfig,
    gamma: f64,
) -> LmiProblem {
    build_problem_scaled(
        a,
        b,
        e_hat,
        spaces,
        cfg,
        gamma,
        &SMatrix::identity(),
        &SMatrix::identity(),
    )
}

/// Same structure as [`build_synthesis_problem`], expressed in
/// per-axis-normalized state and action coordinates.
#[allow(clippy::too_many_arguments)]
fn build_problem_scaled(
    a: &SMatrix<f64, 10, 10>,
    b: &SMatrix<f64, 10, 6>,
    e_hat: &TrackingError,
    spaces: &SpaceConfig,
    cfg: &TeacherConfig,
    gamma: f64,
    sc: &SMatrix<f64, 10, 10>,
    sd: &SMatrix<f64, 6, 6>,
) -> LmiProblem {
    let n = 10;
    let m = 6;
    let mut prob = LmiProblem::new(
        vec![VarShape::Sym(n), VarShape::Rect(m, n), VarShape::Sym(m)],
        cfg.lmi_margin,
    );
    let sc_inv = SMatrix::<f64, 10, 10>::from_fn(|i, j| {
        if i == j {
            1.0 / sc[(i, i)]
        } else {
            0.0
        }
    });
    let a_scaled = sc_inv * a * sc;
    let b_scaled = sc_inv * b * sd;
    let e_scaled = sc_inv * e_hat.0;
    let a_dyn = DMatrix::from_fn(n, n, |i, j| a_scaled[(i, j)]);
    let b_dyn = DMatrix::from_fn(n, m, |i, j| b_scaled[(i, j)]);

    // (i) [[Q, R^T], [R, T]] >= margin*I couples the gain to its slack.
    {
        let e_top = embed(n + m, n, 0);
        let e_bot = embed(n + m, m, n);
        prob.add_constraint(Constraint {
            label: "slack-coupling".into(),
            constant: DMatrix::zeros(n + m, n + m),
            terms: vec![
                AffineTerm {
                    var: 0,
                    left: e_top.clone(),
                    right: e_top.clone(),
                    scale: 1.0,
                    symmetrize: false,
                },
                AffineTerm {
                    var: 1,
                    left: e_bot.clone(),
                    right: e_top,
                    scale: 1.0,
                    symmetrize: true,
                },
                AffineTerm {
                    var: 2,
                    left: e_bot.clone(),
                    right: e_bot,
                    scale: 1.0,
                    symmetrize: false,
                },
            ],
        });
    }

    // (ii) I - Cbar Q Cbar^T >= margin*I keeps the ellipsoid inside the
    // theta-scaled constraint box (rows of C normalized by theta*c).
    {
        let c_mat = spaces.safety().mat();
        let c_vec = spaces.safety().bound();
        let p_rows = c_mat.nrows();
        let mut c_bar = c_mat.clone();
        for i in 0..p_rows {
            let s = 1.0 / (spaces.theta * c_vec[i]);
            for j in 0..c_bar.ncols() {
                c_bar[(i, j)] *= s * sc[(j, j)];
            }
        }
        prob.add_constraint(Constraint {
            label: "box-containment".into(),
            constant: DMatrix::identity(p_rows, p_rows),
            terms: vec![AffineTerm {
                var: 0,
                left: c_bar.clone(),
                right: c_bar,
                scale: -1.0,
                symmetrize: false,
            }],
        });
    }

    // (iii) I - Dbar T Dbar^T >= margin*I keeps commanded actions inside
    // the action box (rows of D normalized by d).
    {
        let d_mat = spaces.actions().mat();
        let d_vec = spaces.actions().bound();
        let q_rows = d_mat.nrows();
        let mut d_bar = d_mat.clone();
        for i in 0..q_rows {
            let s = 1.0 / d_vec[i];
            for j in 0..d_bar.ncols() {
                d_bar[(i, j)] *= s * sd[(j, j)];
            }
        }
        prob.add_constraint(Constraint {
            label: "action-containment".into(),
            constant: DMatrix::identity(q_rows, q_rows),
            terms: vec![AffineTerm {
                var: 2,
                left: d_bar.clone(),
                right: d_bar,
                scale: -1.0,
                symmetrize: false,
            }],
        });
    }

    // (iv) Initial containment of the triggering error in the ellipsoid.
    match cfg.containment {
        ContainmentMode::Schur => {
            let mut constant = DMatrix::zeros(n + 1, n + 1);
            constant[(0, 0)] = 1.0;
            for i in 0..n {
                constant[(0, 1 + i)] = e_scaled[i];
                constant[(1 + i, 0)] = e_scaled[i];
            }
            let e_q = embed(n + 1, n, 1);
            prob.add_constraint(Constraint {
                label: "initial-containment".into(),
                constant,
                terms: vec![AffineTerm {
                    var: 0,
                    left: e_q.clone(),
                    right: e_q,
                    scale: 1.0,
                    symmetrize: false,
                }],
            });
        }
        ContainmentMode::PrintedDiag => {
            let mut constant = DMatrix::zeros(n, n);
            for i in 0..n {
                constant[(i, i)] = -(n as f64) * e_scaled[i] * e_scaled[i];
            }
            prob.add_constraint(Constraint {
                label: "initial-containment-diag".into(),
                constant,
                terms: vec![AffineTerm {
                    var: 0,
                    left: DMatrix::identity(n, n),
                    right: DMatrix::identity(n, n),
                    scale: 1.0,
                    symmetrize: false,
                }],
            });
        }
    }

    // (v) Robust contraction block:
    // [[(alpha - (1 + 1/gamma) kappa) Q, Q A^T + R^T B^T],
    //  [A Q + B R, (1 + gamma)^{-1} Q]] >= margin*I.
    {
        let coeff = cfg.contraction_coeff(gamma);
        let e_top = embed(2 * n, n, 0);
        let e_bot = embed(2 * n, n, n);
        prob.add_constraint(Constraint {
            label: "contraction".into(),
            constant: DMatrix::zeros(2 * n, 2 * n),
            terms: vec![
                AffineTerm {
                    var: 0,
                    left: e_top.clone(),
                    right: e_top.clone(),
                    scale: coeff,
                    symmetrize: false,
                },
                AffineTerm {
                    var: 0,
                    left: e_bot.clone(),
                    right: e_bot.clone(),
                    scale: 1.0 / (1.0 + gamma),
                    symmetrize: false,
                },
                AffineTerm {
                    var: 0,
                    left: &e_bot * &a_dyn,
                    right: e_top.clone(),
                    scale: 1.0,
                    symmetrize: true,
                },
                AffineTerm {
                    var: 1,
                    left: &e_bot * &b_dyn,
                    right: e_top,
                    scale: 1.0,
                    symmetrize: true,
                },
            ],
        });
    }

    prob
}

/// Integrator chains of the reduced-order model: (upstream state,
/// integrated velocity state, driving input). Heights and attitudes are
/// two-step chains from their accelerations; planar velocities are
/// single-step.
const CHAINS2: [(usize, usize, usize); 4] = [(0, 6, 2), (1, 7, 3), (2, 8, 4), (3, 9, 5)];
const CHAINS1: [(usize, usize); 2] = [(4, 0), (5, 1)];

/// Closed-form starting point for the feasibility solve: places a
/// complex pole pair on every two-step chain (defective real poles would
/// force ellipsoids more anisotropic than the containment constraints
/// admit), shapes the per-chain ellipsoid from the rotation normal form,
/// and sizes extents from the constraint boxes.
fn analytic_seed(
    e_hat: &TrackingError,
    spaces: &SpaceConfig,
    cfg: &TeacherConfig,
    gamma: f64,
    dt_like: f64,
) -> (
    SMatrix<f64, 10, 10>,
    SMatrix<f64, 6, 10>,
    SMatrix<f64, 6, 6>,
) {
    let r = (cfg.contraction_coeff(gamma) / (1.0 + gamma)).sqrt();
    // Pole modulus close to the budget, at the tilt that maximizes how
    // deep a point the chain ellipse can contain relative to its box
    // extent (the ratio equals rho, attained at cos(phi) = rho).
    let rho = 0.95 * r;
    let phi = rho.clamp(0.0, 0.999).acos();

    // Per-axis target ellipsoid extents: box-limited where constrained,
    // wide enough for the trigger elsewhere.
    let c_mat = spaces.safety().mat();
    let c_vec = spaces.safety().bound();
    let mut ext = [0.0f64; 10];
    for (i, item) in ext.iter_mut().enumerate() {
        let mut bound = f64::INFINITY;
        for row in 0..c_mat.nrows() {
            let w = c_mat[(row, i)].abs();
            if w > 1e-12 {
                bound = bound.min(spaces.theta * c_vec[row] / w);
            }
        }
        *item = if bound.is_finite() {
            bound
        } else {
            (2.0 * e_hat.0[i].abs()).max(0.4)
        };
    }

    let mut q = SMatrix::<f64, 10, 10>::zeros();
    let mut f = SMatrix::<f64, 6, 10>::zeros();
    let t = dt_like;
    for &(pos, vel, input) in &CHAINS2 {
        // Gains from the characteristic polynomial of the closed 2x2.
        let f2 = (2.0 * rho * phi.cos() - 2.0) / t;
        let f1 = (1.0 + f2 * t - rho * rho) / (t * t);
        f[(input, pos)] = f1;
        f[(input, vel)] = f2;
        // Q-block = ext^2 * S S^T from the real normal form.
        let s21 = (rho * phi.cos() - 1.0) / t;
        let s22 = rho * phi.sin() / t;
        let scale = ext[pos] * ext[pos];
        q[(pos, pos)] = scale;
        q[(pos, vel)] = scale * s21;
        q[(vel, pos)] = scale * s21;
        q[(vel, vel)] = scale * (s21 * s21 + s22 * s22);
    }
    for &(pos, input) in &CHAINS1 {
        let fv = (0.8 * r - 1.0) / t;
        f[(input, pos)] = fv;
        q[(pos, pos)] = ext[pos] * ext[pos];
    }

    let r_seed = f * q;
    let t_seed = f * q * f.transpose() + SMatrix::<f64, 6, 6>::identity() * 0.1;
    (q, r_seed, t_seed)
}

/// Synthesizes a patch at the given trigger.
///
/// `model` is the nominal `(A(s_k), B)` pair evaluated at the triggering
/// state. The solver is seeded deterministically from the analytic
/// starting point, so identical triggers give identical patches.
pub fn synthesize(
    e_k: &TrackingError,
    cfg: &TeacherConfig,
    spaces: &SpaceConfig,
    model: (&SMatrix<f64, 10, 10>, &SMatrix<f64, 10, 6>),
    created_at: usize,
) -> Result<Patch, SynthesisFailure> {
    synthesize_with_gamma(e_k, cfg, spaces, model, created_at, cfg.gamma)
}

fn synthesize_with_gamma(
    e_k: &TrackingError,
    cfg: &TeacherConfig,
    spaces: &SpaceConfig,
    (a, b): (&SMatrix<f64, 10, 10>, &SMatrix<f64, 10, 6>),
    created_at: usize,
    gamma: f64,
) -> Result<Patch, SynthesisFailure> {
    if spaces.theta + spaces.chi * spaces.eta >= 1.0 {
        return Err(SynthesisFailure::Precondition(format!(
            "theta + chi * eta = {} must be < 1",
            spaces.theta + spaces.chi * spaces.eta
        )));
    }
    if cfg.contraction_coeff(gamma) <= 0.0 {
        return Err(SynthesisFailure::Precondition(format!(
            "contraction coefficient must be positive at gamma = {gamma}"
        )));
    }
    if !e_k.is_finite() {
        return Err(SynthesisFailure::Precondition("trigger error not finite".into()));
    }

    let center = patch_center(e_k, spaces.chi);
    let e_hat = *e_k - center;
    let (sc, sd) = axis_scales(spaces);
    let sc_inv = SMatrix::<f64, 10, 10>::from_fn(|i, j| if i == j { 1.0 / sc[(i, i)] } else { 0.0 });
    let sd_inv = SMatrix::<f64, 6, 6>::from_fn(|i, j| if i == j { 1.0 / sd[(i, i)] } else { 0.0 });
    let mut prob = build_problem_scaled(a, b, &e_hat, spaces, cfg, gamma, &sc, &sd);
    // Seed with the closed-form construction, transformed into the
    // normalized coordinates the problem is posed in.
    let dt_like = a[(0, 6)].abs().max(1e-3);
    let (q_seed, r_seed, t_seed) = analytic_seed(&e_hat, spaces, cfg, gamma, dt_like);
    let q0 = sc_inv * q_seed * sc_inv;
    let r0 = sd_inv * r_seed * sc_inv;
    let t0 = sd_inv * t_seed * sd_inv;
    prob = prob.with_initial(vec![
        DMatrix::from_fn(10, 10, |i, j| q0[(i, j)]),
        DMatrix::from_fn(6, 10, |i, j| r0[(i, j)]),
        DMatrix::from_fn(6, 6, |i, j| t0[(i, j)]),
    ]);

    let sol = solve_feasibility(&prob, cfg.lmi_tol, cfg.lmi_max_iter)
        .map_err(|e| SynthesisFailure::Degenerate(e.to_string()))?;
    match sol.status {
        SolveStatus::Feasible => {}
        SolveStatus::Infeasible => {
            return Err(SynthesisFailure::Infeasible {
                max_violation: sol.max_violation,
                iterations: sol.iterations,
            })
        }
        SolveStatus::MaxIter => {
            return Err(SynthesisFailure::Budget {
                max_violation: sol.max_violation,
            })
        }
    }

    // Undo the normalization: Q = Sc Q' Sc, R = Sd R' Sc, T = Sd T' Sd.
    let q_sol = &sol.values[0];
    let r_sol = &sol.values[1];
    let t_sol = &sol.values[2];
    let q_static = sc * SMatrix::<f64, 10, 10>::from_fn(|i, j| q_sol[(i, j)]) * sc;
    let p_static = q_static
        .try_inverse()
        .ok_or_else(|| SynthesisFailure::Degenerate("Q is not invertible".into()))?;
    // Symmetrize against inversion roundoff.
    let p_static = (p_static + p_static.transpose()) * 0.5;
    let p_max = p_static.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if !p_max.is_finite() || p_max > 1e9 {
        return Err(SynthesisFailure::Degenerate(format!(
            "Lyapunov matrix is ill-conditioned (max entry {p_max:.3e})"
        )));
    }
    let r_static = sd * SMatrix::<f64, 6, 10>::from_fn(|i, j| r_sol[(i, j)]) * sc;
    let f_gain = r_static * p_static;
    let t_bound = sd * SMatrix::<f64, 6, 6>::from_fn(|i, j| t_sol[(i, j)]) * sd;

    let tau = match cfg.tau {
        Some(t) => {
            let min = teaching_horizon(cfg, spaces.chi)
                .map_err(|e| SynthesisFailure::Precondition(e.to_string()))?;
            if t < min {
                return Err(SynthesisFailure::Precondition(format!(
                    "configured horizon {t} is below the minimum {min}"
                )));
            }
            t
        }
        None => teaching_horizon(cfg, spaces.chi)
            .map_err(|e| SynthesisFailure::Precondition(e.to_string()))?,
    };

    Ok(Patch {
        center,
        f_gain,
        p: p_static,
        q: q_static,
        t_bound,
        tau,
        created_at,
        params_used: PatchParams {
            alpha: cfg.alpha,
            gamma,
            kappa: cfg.kappa,
            theta: spaces.theta,
            chi: spaces.chi,
        },
    })
}

/// Synthesis with the configured split parameter, retrying the fixed
/// alternatives 0.5 and 2 when the first solve is infeasible.
pub fn synthesize_with_retry(
    e_k: &TrackingError,
    cfg: &TeacherConfig,
    spaces: &SpaceConfig,
    model: (&SMatrix<f64, 10, 10>, &SMatrix<f64, 10, 6>),
    created_at: usize,
) -> Result<Patch, SynthesisFailure> {
    let mut last = match synthesize_with_gamma(e_k, cfg, spaces, model, created_at, cfg.gamma) {
        Ok(p) => return Ok(p),
        Err(e @ SynthesisFailure::Precondition(_)) => return Err(e),
        Err(e) => e,
    };
    for gamma in [0.5, 2.0] {
        if (gamma - cfg.gamma).abs() < 1e-12 || cfg.contraction_coeff(gamma) <= 0.0 {
            continue;
        }
        match synthesize_with_gamma(e_k, cfg, spaces, model, created_at, gamma) {
            Ok(p) => return Ok(p),
            Err(e @ SynthesisFailure::Precondition(_)) => return Err(e),
            Err(e) => last = e,
        }
    }
    Err(last)
}
