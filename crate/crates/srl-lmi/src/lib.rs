//! Small dense semidefinite feasibility solver.
//!
//! Problems are posed as a list of matrix variables plus affine symmetric
//! matrix expressions that must be positive semidefinite with a margin:
//! `G_j(x) >= margin * I`. Problems here are tiny (blocks up to ~40x40),
//! so the solver favors robustness over asymptotic speed: it alternates
//! projections between the affine manifold spanned by the variables and
//! the product of shifted PSD cones.

mod problem;
mod psd;
mod solver;

pub use problem::{AffineTerm, Constraint, LmiProblem, VarShape};
pub use psd::{check_psd, closest_psd, sym_eigenvalues};
pub use solver::{solve_feasibility, verify_solution, LmiSolution, SolveStatus};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LmiError {
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("malformed problem: {0}")]
    Malformed(String),
}
