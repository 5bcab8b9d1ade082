use nalgebra::DMatrix;
use std::fmt::Write as _;

use crate::LmiError;

/// Shape of a matrix decision variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarShape {
    /// Symmetric `n x n`; parametrized by its upper triangle.
    Sym(usize),
    /// General `rows x cols`.
    Rect(usize, usize),
}

impl VarShape {
    /// Number of scalar coordinates behind the variable.
    pub fn coords(&self) -> usize {
        match *self {
            VarShape::Sym(n) => n * (n + 1) / 2,
            VarShape::Rect(r, c) => r * c,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match *self {
            VarShape::Sym(n) => (n, n),
            VarShape::Rect(r, c) => (r, c),
        }
    }
}

/// One affine term `scale * L * V * R^T` of a constraint, optionally
/// symmetrized to `scale * (L V R^T + R V^T L^T)`.
#[derive(Clone, Debug)]
pub struct AffineTerm {
    pub var: usize,
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
    pub scale: f64,
    pub symmetrize: bool,
}

impl AffineTerm {
    fn eval(&self, value: &DMatrix<f64>) -> DMatrix<f64> {
        let m = &self.left * value * self.right.transpose();
        if self.symmetrize {
            (&m + m.transpose()) * self.scale
        } else {
            m * self.scale
        }
    }
}

/// Affine symmetric matrix expression required to satisfy
/// `constant + sum(terms) >= margin * I`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub label: String,
    pub constant: DMatrix<f64>,
    pub terms: Vec<AffineTerm>,
}

impl Constraint {
    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    /// Evaluates the expression at the given variable values.
    pub fn eval(&self, values: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for t in &self.terms {
            m += t.eval(&values[t.var]);
        }
        m
    }
}

/// Semidefinite feasibility problem over a list of matrix variables.
#[derive(Clone, Debug)]
pub struct LmiProblem {
    pub vars: Vec<VarShape>,
    pub constraints: Vec<Constraint>,
    /// Every constraint must satisfy `G(x) >= margin * I`.
    pub margin: f64,
    /// Optional deterministic warm start (one value per variable).
    pub initial_values: Option<Vec<DMatrix<f64>>>,
}

impl LmiProblem {
    pub fn new(vars: Vec<VarShape>, margin: f64) -> Self {
        assert!(margin > 0.0, "margin must be positive");
        Self {
            vars,
            constraints: Vec::new(),
            margin,
            initial_values: None,
        }
    }

    pub fn add_constraint(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn with_initial(mut self, values: Vec<DMatrix<f64>>) -> Self {
        self.initial_values = Some(values);
        self
    }

    /// Total number of scalar variable coordinates.
    pub fn coord_count(&self) -> usize {
        self.vars.iter().map(VarShape::coords).sum()
    }

    pub fn validate(&self) -> Result<(), LmiError> {
        for c in &self.constraints {
            if c.constant.nrows() != c.constant.ncols() {
                return Err(LmiError::Malformed(format!(
                    "constraint '{}' constant is not square",
                    c.label
                )));
            }
            let asym = max_asymmetry(&c.constant);
            if asym > 1e-10 {
                return Err(LmiError::NotSymmetric(asym));
            }
            for t in &c.terms {
                if t.var >= self.vars.len() {
                    return Err(LmiError::Malformed(format!(
                        "constraint '{}' references unknown variable {}",
                        c.label, t.var
                    )));
                }
                let (vr, vc) = self.vars[t.var].dims();
                if t.left.ncols() != vr || t.right.ncols() != vc {
                    return Err(LmiError::Malformed(format!(
                        "constraint '{}' term on variable {} has inner dims {}x{}, expected {}x{}",
                        c.label,
                        t.var,
                        t.left.ncols(),
                        t.right.ncols(),
                        vr,
                        vc
                    )));
                }
                if t.left.nrows() != c.dim() || t.right.nrows() != c.dim() {
                    return Err(LmiError::Malformed(format!(
                        "constraint '{}' term on variable {} has outer dims {}x{}, expected {}",
                        c.label,
                        t.var,
                        t.left.nrows(),
                        t.right.nrows(),
                        c.dim()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump of the problem instance for offline inspection.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "lmi-problem margin={:.6e}", self.margin).unwrap();
        for (i, v) in self.vars.iter().enumerate() {
            let (r, c) = v.dims();
            let kind = match v {
                VarShape::Sym(_) => "sym",
                VarShape::Rect(..) => "rect",
            };
            writeln!(out, "var {i} {kind} {r}x{c}").unwrap();
        }
        for c in &self.constraints {
            writeln!(out, "constraint \"{}\" dim={}", c.label, c.dim()).unwrap();
            writeln!(out, "  constant:").unwrap();
            write_matrix(&mut out, &c.constant);
            for t in &c.terms {
                writeln!(
                    out,
                    "  term var={} scale={:.6e} symmetrize={}",
                    t.var, t.scale, t.symmetrize
                )
                .unwrap();
                writeln!(out, "  left:").unwrap();
                write_matrix(&mut out, &t.left);
                writeln!(out, "  right:").unwrap();
                write_matrix(&mut out, &t.right);
            }
        }
        out
    }
}

fn write_matrix(out: &mut String, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        out.push_str("   ");
        for j in 0..m.ncols() {
            write!(out, " {:.9e}", m[(i, j)]).unwrap();
        }
        out.push('\n');
    }
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}
