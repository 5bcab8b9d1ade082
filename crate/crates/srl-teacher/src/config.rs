use serde::{Deserialize, Serialize};

/// How the initial-containment inequality of the synthesis problem is
/// posed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainmentMode {
    /// Exact Schur form `[[1, e^T], [e, Q]] >= eps*I`, equivalent to
    /// `e^T Q^{-1} e <= 1`. Default.
    Schur,
    /// `Q - n * diag(e)^2 >= eps*I`, a stronger diagonal sufficient
    /// condition; usually infeasible together with tight box containment.
    PrintedDiag,
}

/// Parameters of the safety-controller synthesis.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TeacherConfig {
    /// Per-step contraction rate of the certified Lyapunov function, in (0,1).
    pub alpha: f64,
    /// Young-inequality split parameter, > 0.
    pub gamma: f64,
    /// Lipschitz bound of the model mismatch, >= 0.
    pub kappa: f64,
    /// Slack parameter of the teaching-horizon bound, > 0.
    pub epsilon: f64,
    /// Teaching horizon override; must be at least the computed minimum.
    /// `None` uses the computed minimum itself.
    pub tau: Option<usize>,
    pub containment: ContainmentMode,
    /// Feasibility margin standing in for strict inequalities.
    pub lmi_margin: f64,
    pub lmi_tol: f64,
    pub lmi_max_iter: usize,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            gamma: 0.125,
            kappa: 0.01,
            epsilon: 1.0,
            tau: Some(10),
            containment: ContainmentMode::Schur,
            lmi_margin: 5e-3,
            lmi_tol: 1e-7,
            lmi_max_iter: 20_000,
        }
    }
}

impl TeacherConfig {
    /// Contraction coefficient `alpha - (1 + 1/gamma) * kappa` for a given
    /// split parameter; must be positive for the synthesis to make sense.
    pub fn contraction_coeff(&self, gamma: f64) -> f64 {
        self.alpha - (1.0 + 1.0 / gamma) * self.kappa
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(format!("alpha = {} must lie in (0, 1)", self.alpha));
        }
        if !(self.gamma > 0.0) {
            return Err(format!("gamma = {} must be positive", self.gamma));
        }
        if self.kappa < 0.0 {
            return Err(format!("kappa = {} must be nonnegative", self.kappa));
        }
        if !(self.epsilon > 0.0) {
            return Err(format!("epsilon = {} must be positive", self.epsilon));
        }
        if self.contraction_coeff(self.gamma) <= 0.0 {
            return Err(format!(
                "contraction coefficient alpha - (1 + 1/gamma) * kappa = {} must be positive",
                self.contraction_coeff(self.gamma)
            ));
        }
        if !(self.lmi_margin > 0.0 && self.lmi_tol > 0.0) {
            return Err("lmi margin and tolerance must be positive".into());
        }
        Ok(())
    }
}
