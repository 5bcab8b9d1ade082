//! High-assurance safety controller: synthesizes a state-centered safety
//! certificate (invariant ellipsoid + linear gain) on demand by solving a
//! small semidefinite feasibility problem, exposes the resulting feedback
//! policy, and computes the number of steps it must hold control.

mod certificate;
mod config;
mod horizon;
mod patch;
mod policy;
mod synthesis;

pub use certificate::{verify_patch, CertificateReport};
pub use config::{ContainmentMode, TeacherConfig};
pub use horizon::{min_horizon_value, teaching_horizon, HorizonError};
pub use patch::{patch_center, Patch, PatchParams};
pub use policy::{teacher_action, TeacherCommand};
pub use synthesis::{build_synthesis_problem, synthesize, synthesize_with_retry, SynthesisFailure};
