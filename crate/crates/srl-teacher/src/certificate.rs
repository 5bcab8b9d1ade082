use nalgebra::{DMatrix, SMatrix};
use srl_core::{SpaceConfig, TrackingError};
use srl_lmi::sym_eigenvalues;

use crate::Patch;

/// Post-hoc verification of a synthesized patch.
///
/// Re-assembles the five synthesis inequalities directly from the
/// solution values (independent of the solver's internal representation)
/// and checks the certificate properties they imply. All eigenvalue
/// fields are raw minima; `*_sup` fields must be <= 1.
#[derive(Clone, Debug)]
pub struct CertificateReport {
    /// Minimum eigenvalues of the five inequalities, in order:
    /// slack coupling, box containment, action containment,
    /// initial containment, contraction block.
    pub lmi_min_eigs: [f64; 5],
    /// Largest eigenvalue of `Q^{1/2} (A+BF)^T P (A+BF) Q^{1/2}`; must be
    /// strictly below alpha.
    pub contraction_eig: f64,
    /// `max_i sqrt(C_i Q C_i^T) / (theta c_i)`.
    pub box_sup: f64,
    /// `max_j sqrt(D_j F Q F^T D_j^T) / d_j`.
    pub input_sup: f64,
    /// Lyapunov level of the triggering error; must be <= 1.
    pub initial_level: f64,
}

impl CertificateReport {
    /// All certificate properties hold within the given eigenvalue slack.
    pub fn passes(&self, eig_slack: f64, alpha: f64) -> bool {
        self.lmi_min_eigs.iter().all(|l| *l >= -eig_slack)
            && self.contraction_eig < alpha + 1e-8
            && self.box_sup <= 1.0 + 1e-9
            && self.input_sup <= 1.0 + 1e-9
            && self.initial_level <= 1.0 + 1e-9
    }
}

/// Verifies a patch against the trigger it was synthesized for.
///
/// `e_k` is the triggering error (the patch-relative error is derived
/// from it and the stored center); `model` is the `(A, B)` pair the patch
/// was built with.
pub fn verify_patch(
    patch: &Patch,
    e_k: &TrackingError,
    spaces: &SpaceConfig,
    model: (&SMatrix<f64, 10, 10>, &SMatrix<f64, 10, 6>),
) -> CertificateReport {
    let (a, b) = model;
    let n = 10;
    let m = 6;
    let q = DMatrix::from_fn(n, n, |i, j| patch.q[(i, j)]);
    let r = {
        let rq = patch.f_gain * patch.q;
        DMatrix::from_fn(m, n, |i, j| rq[(i, j)])
    };
    let t = DMatrix::from_fn(m, m, |i, j| patch.t_bound[(i, j)]);
    let e_hat = e_k.0 - patch.center.0;
    let pu = &patch.params_used;

    // (i) [[Q, R^T], [R, T]]
    let mut g1 = DMatrix::zeros(n + m, n + m);
    g1.view_mut((0, 0), (n, n)).copy_from(&q);
    g1.view_mut((n, 0), (m, n)).copy_from(&r);
    g1.view_mut((0, n), (n, m)).copy_from(&r.transpose());
    g1.view_mut((n, n), (m, m)).copy_from(&t);

    // (ii) I - Cbar Q Cbar^T
    let c_mat = spaces.safety().mat();
    let c_vec = spaces.safety().bound();
    let mut c_bar = c_mat.clone();
    for i in 0..c_bar.nrows() {
        let s = 1.0 / (pu.theta * c_vec[i]);
        for j in 0..c_bar.ncols() {
            c_bar[(i, j)] *= s;
        }
    }
    let g2 = DMatrix::identity(c_bar.nrows(), c_bar.nrows()) - &c_bar * &q * c_bar.transpose();

    // (iii) I - Dbar T Dbar^T
    let d_mat = spaces.actions().mat();
    let d_vec = spaces.actions().bound();
    let mut d_bar = d_mat.clone();
    for i in 0..d_bar.nrows() {
        let s = 1.0 / d_vec[i];
        for j in 0..d_bar.ncols() {
            d_bar[(i, j)] *= s;
        }
    }
    let g3 = DMatrix::identity(d_bar.nrows(), d_bar.nrows()) - &d_bar * &t * d_bar.transpose();

    // (iv) [[1, e^T], [e, Q]]
    let mut g4 = DMatrix::zeros(n + 1, n + 1);
    g4[(0, 0)] = 1.0;
    for i in 0..n {
        g4[(0, 1 + i)] = e_hat[i];
        g4[(1 + i, 0)] = e_hat[i];
        for j in 0..n {
            g4[(1 + i, 1 + j)] = q[(i, j)];
        }
    }

    // (v) contraction block with the gamma actually used.
    let coeff = pu.alpha - (1.0 + 1.0 / pu.gamma) * pu.kappa;
    let a_dyn = DMatrix::from_fn(n, n, |i, j| a[(i, j)]);
    let b_dyn = DMatrix::from_fn(n, m, |i, j| b[(i, j)]);
    let aq_br = &a_dyn * &q + &b_dyn * &r;
    let mut g5 = DMatrix::zeros(2 * n, 2 * n);
    g5.view_mut((0, 0), (n, n)).copy_from(&(&q * coeff));
    g5.view_mut((n, n), (n, n))
        .copy_from(&(&q * (1.0 / (1.0 + pu.gamma))));
    g5.view_mut((n, 0), (n, n)).copy_from(&aq_br);
    g5.view_mut((0, n), (n, n)).copy_from(&aq_br.transpose());

    let lmi_min_eigs = [
        sym_eigenvalues(&g1)[0],
        sym_eigenvalues(&g2)[0],
        sym_eigenvalues(&g3)[0],
        sym_eigenvalues(&g4)[0],
        sym_eigenvalues(&g5)[0],
    ];

    // Contraction of the closed loop in the P metric, checked through the
    // similarity transform Q^{1/2} M^T P M Q^{1/2}.
    let closed = a + b * patch.f_gain;
    let m_dyn = DMatrix::from_fn(n, n, |i, j| closed[(i, j)]);
    let p_dyn = DMatrix::from_fn(n, n, |i, j| patch.p[(i, j)]);
    let q_sqrt = sym_sqrt(&q);
    let contraction_mat = &q_sqrt * m_dyn.transpose() * &p_dyn * &m_dyn * &q_sqrt;
    let contraction_eig = *sym_eigenvalues(&contraction_mat)
        .last()
        .expect("nonempty spectrum");

    // Support-function containment checks.
    let mut box_sup = 0.0f64;
    for i in 0..c_mat.nrows() {
        let row = c_mat.row(i).transpose();
        let val = (row.transpose() * &q * &row)[(0, 0)].max(0.0).sqrt() / (pu.theta * c_vec[i]);
        box_sup = box_sup.max(val);
    }
    let fq = patch.f_gain * patch.q;
    let fqf = {
        let fqft = fq * patch.f_gain.transpose();
        DMatrix::from_fn(m, m, |i, j| fqft[(i, j)])
    };
    let mut input_sup = 0.0f64;
    for j in 0..d_mat.nrows() {
        let row = d_mat.row(j).transpose();
        let val = (row.transpose() * &fqf * &row)[(0, 0)].max(0.0).sqrt() / d_vec[j];
        input_sup = input_sup.max(val);
    }

    let initial_level = (e_hat.transpose() * patch.p * e_hat)[(0, 0)];

    CertificateReport {
        lmi_min_eigs,
        contraction_eig,
        box_sup,
        input_sup,
        initial_level,
    }
}

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let sqrt_vals = nalgebra::DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose()
}

impl std::fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "lmi_min_eigs: {:.9e} {:.9e} {:.9e} {:.9e} {:.9e}",
            self.lmi_min_eigs[0],
            self.lmi_min_eigs[1],
            self.lmi_min_eigs[2],
            self.lmi_min_eigs[3],
            self.lmi_min_eigs[4]
        )?;
        writeln!(f, "contraction_eig: {:.9e}", self.contraction_eig)?;
        writeln!(f, "box_sup: {:.9e}", self.box_sup)?;
        writeln!(f, "input_sup: {:.9e}", self.input_sup)?;
        write!(f, "initial_level: {:.9e}", self.initial_level)
    }
}
