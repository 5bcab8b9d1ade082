use nalgebra::{Cholesky, DMatrix, DVector};

use crate::psd::{smat_from, svec_into, sym_eigenvalues};
use crate::{LmiError, LmiProblem, VarShape};

/// Solver outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    MaxIter,
}

/// Result of a feasibility solve. `values` holds the best iterate even
/// when the status is not `Feasible`.
#[derive(Clone, Debug)]
pub struct LmiSolution {
    pub values: Vec<DMatrix<f64>>,
    /// `(margin - tol) - min_j lambda_min(G_j)`; <= 0 when every
    /// constraint holds within tolerance of the margin.
    pub max_violation: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// Iterations without relative improvement before declaring no progress.
const STALL_WINDOW: usize = 1500;
const STALL_REL: f64 = 1e-9;

/// Solves the feasibility problem with Douglas-Rachford splitting between
/// the affine manifold reachable by the variables and the product of
/// shifted PSD cones, one per constraint. The affine shadow of the
/// governing sequence is the reported iterate, so returned values always
/// correspond to actual variable assignments.
///
/// Deterministic for fixed inputs: the iteration starts from the
/// problem's warm start (or zero) and uses no randomness.
pub fn solve_feasibility(
    prob: &LmiProblem,
    tol: f64,
    max_iter: usize,
) -> Result<LmiSolution, LmiError> {
    prob.validate()?;
    let n_coords = prob.coord_count();
    if n_coords == 0 || prob.constraints.is_empty() {
        return Err(LmiError::Malformed(
            "problem needs at least one variable and one constraint".into(),
        ));
    }

    // Constraint block layout in stacked svec coordinates.
    let dims: Vec<usize> = prob.constraints.iter().map(|c| c.dim()).collect();
    let lens: Vec<usize> = dims.iter().map(|n| n * (n + 1) / 2).collect();
    let offsets: Vec<usize> = lens
        .iter()
        .scan(0, |acc, l| {
            let o = *acc;
            *acc += l;
            Some(o)
        })
        .collect();
    let m_total: usize = lens.iter().sum();

    // b = svec of the constraint constants; E maps variable coordinates to
    // stacked svec space. Both are exact because the expressions are affine.
    let zero_vals: Vec<DMatrix<f64>> = prob
        .vars
        .iter()
        .map(|v| {
            let (r, c) = v.dims();
            DMatrix::zeros(r, c)
        })
        .collect();
    let mut b = DVector::zeros(m_total);
    for (j, c) in prob.constraints.iter().enumerate() {
        let g0 = c.eval(&zero_vals);
        svec_into(&g0, &mut b.as_mut_slice()[offsets[j]..offsets[j] + lens[j]]);
    }

    let mut e_mat = DMatrix::zeros(m_total, n_coords);
    let mut col = 0;
    for (vi, shape) in prob.vars.iter().enumerate() {
        for k in 0..shape.coords() {
            let mut vals = zero_vals.clone();
            set_basis(&mut vals[vi], *shape, k);
            for (j, c) in prob.constraints.iter().enumerate() {
                let mut g = DMatrix::zeros(dims[j], dims[j]);
                for t in c.terms.iter().filter(|t| t.var == vi) {
                    let m = &t.left * &vals[vi] * t.right.transpose();
                    if t.symmetrize {
                        g += (&m + m.transpose()) * t.scale;
                    } else {
                        g += m * t.scale;
                    }
                }
                let mut seg = vec![0.0; lens[j]];
                svec_into(&g, &mut seg);
                for (r, v) in seg.iter().enumerate() {
                    e_mat[(offsets[j] + r, col)] = *v;
                }
            }
            col += 1;
        }
    }

    let gram = e_mat.transpose() * &e_mat;
    let chol = Cholesky::new(gram).ok_or_else(|| {
        LmiError::Malformed("variable-to-constraint map is rank deficient".into())
    })?;

    // Start from the warm start if provided, otherwise from zero.
    let mut x = DVector::zeros(n_coords);
    if let Some(init) = &prob.initial_values {
        if init.len() != prob.vars.len() {
            return Err(LmiError::Malformed("warm start has wrong arity".into()));
        }
        let mut k = 0;
        for (vi, shape) in prob.vars.iter().enumerate() {
            let coords = extract_coords(&init[vi], *shape);
            for v in coords {
                x[k] = v;
                k += 1;
            }
        }
    }

    // Governing Douglas-Rachford sequence, started at the affine point of
    // the warm start.
    let mut z = &e_mat * &x + &b;
    let mut best_violation = f64::INFINITY;
    let mut best_x = x.clone();
    let mut last_improvement = 0usize;

    let project_cones = |v: &DVector<f64>| -> DVector<f64> {
        let mut out = v.clone();
        for j in 0..dims.len() {
            let seg = &v.as_slice()[offsets[j]..offsets[j] + lens[j]];
            let g = smat_from(seg, dims[j]);
            let eig = g.symmetric_eigen();
            let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            if min_eig < prob.margin {
                let clipped = DVector::from_iterator(
                    dims[j],
                    eig.eigenvalues.iter().map(|&l| l.max(prob.margin)),
                );
                let proj = &eig.eigenvectors
                    * DMatrix::from_diagonal(&clipped)
                    * eig.eigenvectors.transpose();
                svec_into(&proj, &mut out.as_mut_slice()[offsets[j]..offsets[j] + lens[j]]);
            }
        }
        out
    };
    let violation_of = |v: &DVector<f64>| -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..dims.len() {
            let seg = &v.as_slice()[offsets[j]..offsets[j] + lens[j]];
            let g = smat_from(seg, dims[j]);
            let min_eig = g
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(prob.margin - min_eig);
        }
        worst
    };

    for iter in 0..max_iter {
        let p = project_cones(&z);
        // Affine projection of the reflected point 2p - z.
        let reflected = &p * 2.0 - &z;
        let rhs = e_mat.transpose() * (&reflected - &b);
        let x_q = chol.solve(&rhs);
        let q = &e_mat * &x_q + &b;

        let violation = violation_of(&q);
        let improvement_bar = if best_violation.is_finite() {
            best_violation - STALL_REL * best_violation.abs().max(1e-12)
        } else {
            f64::INFINITY
        };
        if violation < improvement_bar {
            best_violation = violation;
            best_x = x_q.clone();
            last_improvement = iter;
        }
        if violation <= tol {
            return Ok(LmiSolution {
                values: unpack(&x_q, &prob.vars),
                max_violation: violation - tol,
                iterations: iter,
                status: SolveStatus::Feasible,
            });
        }
        if iter - last_improvement > STALL_WINDOW {
            return Ok(LmiSolution {
                values: unpack(&best_x, &prob.vars),
                max_violation: best_violation - tol,
                iterations: iter,
                status: SolveStatus::Infeasible,
            });
        }

        z += &q - &p;
        x = x_q;
    }
    let _ = x;

    Ok(LmiSolution {
        values: unpack(&best_x, &prob.vars),
        max_violation: best_violation - tol,
        iterations: max_iter,
        status: SolveStatus::MaxIter,
    })
}

/// Writes the k-th basis element of the variable parametrization.
fn set_basis(m: &mut DMatrix<f64>, shape: VarShape, k: usize) {
    match shape {
        VarShape::Sym(n) => {
            let mut idx = 0;
            for j in 0..n {
                for i in 0..=j {
                    if idx == k {
                        m[(i, j)] = 1.0;
                        m[(j, i)] = 1.0;
                        return;
                    }
                    idx += 1;
                }
            }
            unreachable!("basis index out of range");
        }
        VarShape::Rect(r, _) => {
            m[(k % r, k / r)] = 1.0;
        }
    }
}

fn extract_coords(m: &DMatrix<f64>, shape: VarShape) -> Vec<f64> {
    match shape {
        VarShape::Sym(n) => {
            let mut out = Vec::with_capacity(shape.coords());
            for j in 0..n {
                for i in 0..=j {
                    out.push(m[(i, j)]);
                }
            }
            out
        }
        VarShape::Rect(..) => m.iter().copied().collect(),
    }
}

fn unpack(x: &DVector<f64>, vars: &[VarShape]) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(vars.len());
    let mut k = 0;
    for shape in vars {
        let (r, c) = shape.dims();
        let mut m = DMatrix::zeros(r, c);
        match shape {
            VarShape::Sym(n) => {
                for j in 0..*n {
                    for i in 0..=j {
                        m[(i, j)] = x[k];
                        m[(j, i)] = x[k];
                        k += 1;
                    }
                }
            }
            VarShape::Rect(rr, _) => {
                for idx in 0..shape.coords() {
                    m[(idx % rr, idx / rr)] = x[k];
                    k += 1;
                }
            }
        }
        out.push(m);
    }
    out
}

/// Re-verifies a solution against the problem with an independent
/// eigenvalue sweep; returns the worst `lambda_min - margin` over all
/// constraints (>= -tol for a sound feasible solution).
pub fn verify_solution(prob: &LmiProblem, values: &[DMatrix<f64>]) -> f64 {
    prob.constraints
        .iter()
        .map(|c| sym_eigenvalues(&c.eval(values))[0] - prob.margin)
        .fold(f64::INFINITY, f64::min)
}
