use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Action, CoreError, TrackingError, ACTION_DIM, STATE_DIM};

/// Box-style two-sided constraint set `{ x | -b <= M x <= b }`.
///
/// With the safety pair `(C, c)` this describes the safety set; with the
/// action pair `(D, d)` it describes the physically feasible action set.
#[derive(Clone, Debug, PartialEq)]
pub struct PolytopeBox {
    mat: DMatrix<f64>,
    bound: DVector<f64>,
}

impl PolytopeBox {
    pub fn new(mat: DMatrix<f64>, bound: DVector<f64>) -> Result<Self, CoreError> {
        if mat.nrows() != bound.len() {
            return Err(CoreError::DimensionMismatch {
                expected: mat.nrows(),
                got: bound.len(),
            });
        }
        if bound.iter().any(|b| !(*b > 0.0)) {
            return Err(CoreError::InvalidBox(
                "every bound entry must be strictly positive".into(),
            ));
        }
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::NonFinite("constraint matrix"));
        }
        Ok(Self { mat, bound })
    }

    /// Constraint matrix (`p x n`).
    pub fn mat(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Positive bound vector (`p`).
    pub fn bound(&self) -> &DVector<f64> {
        &self.bound
    }

    pub fn rows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn dim(&self) -> usize {
        self.mat.ncols()
    }

    /// True iff `-scale*b <= M x <= scale*b` holds component-wise.
    /// Boundary points count as inside.
    pub fn contains(&self, x: &DVector<f64>, scale: f64) -> Result<bool, CoreError> {
        if x.len() != self.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let y = &self.mat * x;
        Ok(y
            .iter()
            .zip(self.bound.iter())
            .all(|(v, b)| v.abs() <= scale * b))
    }

    /// Largest row-normalized magnitude `max_i |M x|_i / (scale * b_i)`.
    /// Values <= 1 are inside the scaled box.
    pub fn normalized_sup(&self, x: &DVector<f64>, scale: f64) -> Result<f64, CoreError> {
        if x.len() != self.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let y = &self.mat * x;
        Ok(y
            .iter()
            .zip(self.bound.iter())
            .map(|(v, b)| v.abs() / (scale * b))
            .fold(0.0, f64::max))
    }
}

/// Region label for a tracking error relative to the safety geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// Inside the self-learning set (eta-shrunk safety set).
    SelfLearn,
    /// Inside the safety set but outside the self-learning set.
    Marginal,
    /// Outside the safety set.
    Unsafe,
}

/// Safety geometry: safety box `(C, c)`, action box `(D, d)` and the
/// shrink fractions for the self-learning set, the patch box, and the
/// patch center.
#[derive(Clone, Debug)]
pub struct SpaceConfig {
    safety: PolytopeBox,
    actions: PolytopeBox,
    /// Self-learning fraction in (0,1).
    pub eta: f64,
    /// Patch-box fraction in (0,1).
    pub theta: f64,
    /// Center-shrink fraction in (0,1).
    pub chi: f64,
}

impl SpaceConfig {
    pub fn new(
        safety: PolytopeBox,
        actions: PolytopeBox,
        eta: f64,
        theta: f64,
        chi: f64,
    ) -> Result<Self, CoreError> {
        for (name, v) in [("eta", eta), ("theta", theta), ("chi", chi)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(CoreError::InvalidConfig(format!(
                    "{name} = {v} must lie in (0, 1)"
                )));
            }
        }
        // Patch-synthesis precondition: theta + chi * eta < 1.
        if theta + chi * eta >= 1.0 {
            return Err(CoreError::InvalidConfig(format!(
                "theta + chi * eta = {} must be < 1",
                theta + chi * eta
            )));
        }
        if safety.dim() != STATE_DIM {
            return Err(CoreError::DimensionMismatch {
                expected: STATE_DIM,
                got: safety.dim(),
            });
        }
        if actions.dim() != ACTION_DIM {
            return Err(CoreError::DimensionMismatch {
                expected: ACTION_DIM,
                got: actions.dim(),
            });
        }
        Ok(Self {
            safety,
            actions,
            eta,
            theta,
            chi,
        })
    }

    /// Default experiment geometry: the safety box constrains the
    /// forward-velocity error to 0.4 m/s and the height error to 0.15 m,
    /// the action box bounds |a_v| by 10 m/s^2 and |a_w| by 20 rad/s^2,
    /// with eta = 0.7, theta = 0.87, chi = 0.15.
    pub fn default_experiment() -> Self {
        let mut c_mat = DMatrix::zeros(2, STATE_DIM);
        c_mat[(0, 4)] = 1.0; // vx error
        c_mat[(1, 0)] = 1.0; // h error
        let c_vec = DVector::from_vec(vec![0.4, 0.15]);
        let d_mat = DMatrix::identity(ACTION_DIM, ACTION_DIM);
        let d_vec = DVector::from_vec(vec![10.0, 10.0, 10.0, 20.0, 20.0, 20.0]);
        let safety = PolytopeBox::new(c_mat, c_vec).expect("default safety box");
        let actions = PolytopeBox::new(d_mat, d_vec).expect("default action box");
        Self::new(safety, actions, 0.7, 0.87, 0.15).expect("default space config")
    }

    pub fn safety(&self) -> &PolytopeBox {
        &self.safety
    }

    pub fn actions(&self) -> &PolytopeBox {
        &self.actions
    }
}

/// True iff `-scale*c <= C e <= scale*c` component-wise. `scale = 1` tests
/// the safety set, `scale = eta` the self-learning set; applied to a
/// patch-relative error with `scale = theta` it tests the patch box.
pub fn membership(
    e: &TrackingError,
    bx: &PolytopeBox,
    scale: f64,
) -> Result<bool, CoreError> {
    assert!(scale > 0.0, "membership scale must be positive");
    bx.contains(&DVector::from_row_slice(e.as_vector().as_slice()), scale)
}

/// Classifies a tracking error into exactly one region label.
pub fn region_of(e: &TrackingError, cfg: &SpaceConfig) -> Result<Region, CoreError> {
    if membership(e, &cfg.safety, cfg.eta)? {
        Ok(Region::SelfLearn)
    } else if membership(e, &cfg.safety, 1.0)? {
        Ok(Region::Marginal)
    } else {
        Ok(Region::Unsafe)
    }
}

/// True iff the action lies in the feasible action box `-d <= D a <= d`.
pub fn action_in_bounds(a: &Action, bx: &PolytopeBox) -> Result<bool, CoreError> {
    bx.contains(&DVector::from_row_slice(a.to_vector().as_slice()), 1.0)
}

/// Plain-data mirror of [`SpaceConfig`] for structured config files.
///
/// Documented keys: `safety.C`, `safety.c`, `actions.D`, `actions.d`,
/// `eta`, `theta`, `chi`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceConfigRaw {
    pub safety: SafetyRaw,
    pub actions: ActionsRaw,
    pub eta: f64,
    pub theta: f64,
    pub chi: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SafetyRaw {
    #[serde(rename = "C")]
    pub mat: Vec<Vec<f64>>,
    #[serde(rename = "c")]
    pub bound: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionsRaw {
    #[serde(rename = "D")]
    pub mat: Vec<Vec<f64>>,
    #[serde(rename = "d")]
    pub bound: Vec<f64>,
}

fn build_box(mat: &[Vec<f64>], bound: &[f64]) -> Result<PolytopeBox, CoreError> {
    let rows = mat.len();
    let cols = mat.first().map_or(0, Vec::len);
    if mat.iter().any(|r| r.len() != cols) {
        return Err(CoreError::InvalidBox("ragged constraint matrix".into()));
    }
    let mat = DMatrix::from_row_iterator(rows, cols, mat.iter().flatten().copied());
    PolytopeBox::new(mat, DVector::from_row_slice(bound))
}

fn box_rows(bx: &PolytopeBox) -> (Vec<Vec<f64>>, Vec<f64>) {
    (
        bx.mat()
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect(),
        bx.bound().iter().copied().collect(),
    )
}

impl SpaceConfigRaw {
    pub fn build(&self) -> Result<SpaceConfig, CoreError> {
        SpaceConfig::new(
            build_box(&self.safety.mat, &self.safety.bound)?,
            build_box(&self.actions.mat, &self.actions.bound)?,
            self.eta,
            self.theta,
            self.chi,
        )
    }

    pub fn from_config(cfg: &SpaceConfig) -> Self {
        let (c_mat, c_vec) = box_rows(cfg.safety());
        let (d_mat, d_vec) = box_rows(cfg.actions());
        Self {
            safety: SafetyRaw {
                mat: c_mat,
                bound: c_vec,
            },
            actions: ActionsRaw {
                mat: d_mat,
                bound: d_vec,
            },
            eta: cfg.eta,
            theta: cfg.theta,
            chi: cfg.chi,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SVector;

    fn err(vals: &[(usize, f64)]) -> TrackingError {
        let mut v = SVector::<f64, STATE_DIM>::zeros();
        for &(i, x) in vals {
            v[i] = x;
        }
        TrackingError(v)
    }

    #[test]
    fn membership_on_experiment_set() {
        let cfg = SpaceConfig::default_experiment();
        // Inside the safety set.
        let e = err(&[(4, 0.2), (0, 0.05)]);
        assert!(membership(&e, cfg.safety(), 1.0).unwrap());
        // Origin is interior for any scale.
        assert!(membership(&TrackingError::zeroed(), cfg.safety(), 0.01).unwrap());
        // 0.3 > 0.7 * 0.4 = 0.28, so outside the eta-shrunk set.
        let e = err(&[(4, 0.3)]);
        assert!(!membership(&e, cfg.safety(), 0.7).unwrap());
        assert!(membership(&e, cfg.safety(), 1.0).unwrap());
    }

    #[test]
    fn membership_rejects_dimension_mismatch() {
        let bx = PolytopeBox::new(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 1.0]),
        )
        .unwrap();
        let e = TrackingError::zeroed();
        assert!(matches!(
            membership(&e, &bx, 1.0),
            Err(CoreError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn region_labels_match_experiment_geometry() {
        let cfg = SpaceConfig::default_experiment();
        assert_eq!(
            region_of(&err(&[(4, 0.2), (0, 0.05)]), &cfg).unwrap(),
            Region::SelfLearn
        );
        assert_eq!(
            region_of(&err(&[(4, 0.35)]), &cfg).unwrap(),
            Region::Marginal
        );
        assert_eq!(region_of(&err(&[(4, 0.5)]), &cfg).unwrap(), Region::Unsafe);
    }

    #[test]
    fn action_bounds_match_experiment_set() {
        let cfg = SpaceConfig::default_experiment();
        let mut a = Action::zeroed();
        a.av[0] = 5.0;
        assert!(action_in_bounds(&a, cfg.actions()).unwrap());
        assert!(action_in_bounds(&Action::zeroed(), cfg.actions()).unwrap());
        let mut a = Action::zeroed();
        a.aw[2] = 25.0;
        assert!(!action_in_bounds(&a, cfg.actions()).unwrap());
    }

    #[test]
    fn config_rejects_bad_fractions() {
        let ok = SpaceConfig::default_experiment();
        // theta + chi * eta >= 1 must be rejected.
        assert!(SpaceConfig::new(
            ok.safety().clone(),
            ok.actions().clone(),
            0.7,
            0.95,
            0.15
        )
        .is_err());
        assert!(
            SpaceConfig::new(ok.safety().clone(), ok.actions().clone(), 1.0, 0.5, 0.15).is_err()
        );
    }

    #[test]
    fn raw_config_round_trip() {
        let cfg = SpaceConfig::default_experiment();
        let raw = SpaceConfigRaw::from_config(&cfg);
        let back = raw.build().unwrap();
        assert_eq!(back.safety(), cfg.safety());
        assert_eq!(back.actions(), cfg.actions());
        assert_eq!(back.eta, cfg.eta);
    }
}
