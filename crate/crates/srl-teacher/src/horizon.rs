use thiserror::Error;

use crate::TeacherConfig;

#[derive(Debug, Error)]
pub enum HorizonError {
    #[error("horizon parameters out of range: {0}")]
    Parameter(String),
}

/// Real-valued lower bound on the teaching horizon:
/// `[ln(1 - (1+eps) chi^2) - 2 ln(1 + 1/eps) - ln(1 + chi)] / ln(alpha)`.
pub fn min_horizon_value(alpha: f64, chi: f64, epsilon: f64) -> Result<f64, HorizonError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(HorizonError::Parameter(format!(
            "alpha = {alpha} must lie in (0, 1)"
        )));
    }
    if !(chi > 0.0 && chi < 1.0) {
        return Err(HorizonError::Parameter(format!(
            "chi = {chi} must lie in (0, 1)"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(HorizonError::Parameter(format!(
            "epsilon = {epsilon} must be positive"
        )));
    }
    let inner = 1.0 - (1.0 + epsilon) * chi * chi;
    if inner <= 0.0 {
        return Err(HorizonError::Parameter(format!(
            "(1 + epsilon) * chi^2 = {} must be < 1",
            (1.0 + epsilon) * chi * chi
        )));
    }
    let numerator = inner.ln() - 2.0 * (1.0 + 1.0 / epsilon).ln() - (1.0 + chi).ln();
    Ok(numerator / alpha.ln())
}

/// Minimal integer teaching horizon, at least one step.
pub fn teaching_horizon(cfg: &TeacherConfig, chi: f64) -> Result<usize, HorizonError> {
    let t = min_horizon_value(cfg.alpha, chi, cfg.epsilon)?;
    Ok((t.ceil().max(1.0)) as usize)
}
