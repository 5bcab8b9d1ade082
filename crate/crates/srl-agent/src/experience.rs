use nalgebra::SVector;
use srl_core::{ActionVec, TrackingError};

/// Observation layout: exteroceptive pair then the tracking error.
pub const OBS_DIM: usize = 12;

/// Agent observation: waypoint distance and heading deviation plus the
/// proprioceptive tracking error.
#[derive(Clone, Copy, Debug)]
pub struct Observation {
    pub d_wp: f64,
    pub psi_wp: f64,
    pub e: TrackingError,
}

impl Observation {
    pub fn to_vector(&self) -> SVector<f64, OBS_DIM> {
        let mut v = SVector::zeros();
        v[0] = self.d_wp;
        v[1] = self.psi_wp;
        for i in 0..10 {
            v[2 + i] = self.e.0[i];
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        self.d_wp.is_finite() && self.psi_wp.is_finite() && self.e.is_finite()
    }
}

/// Which controller produced the stored action.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionSource {
    Student,
    Teacher,
}

/// One replayed transition; teacher-sourced tuples carry the safety
/// demonstrations gathered during teaching periods.
#[derive(Clone, Copy, Debug)]
pub struct ExperienceTuple {
    pub o: Observation,
    pub a: ActionVec,
    pub o_next: Observation,
    pub r: f64,
    pub source: ActionSource,
    pub step: usize,
}
