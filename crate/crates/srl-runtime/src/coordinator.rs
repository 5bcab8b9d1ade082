use srl_agent::ActionSource;
use srl_core::{region_of, Region, SpaceConfig, TrackingError};
use srl_plant::{AMatrix, BMatrix};
use srl_teacher::{synthesize_with_retry, Patch, TeacherConfig};

use crate::RunMode;

/// Who holds control.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlMode {
    Student,
    Teacher,
}

/// Coordinator bookkeeping between steps.
#[derive(Clone, Debug)]
pub struct CoordinatorState {
    pub mode: ControlMode,
    pub active_patch: Option<Patch>,
    /// Teacher-controlled steps remaining, counting the next one.
    pub teaching_steps_left: usize,
    pub last_region: Region,
}

impl CoordinatorState {
    pub fn initial() -> Self {
        Self {
            mode: ControlMode::Student,
            active_patch: None,
            teaching_steps_left: 0,
            last_region: Region::SelfLearn,
        }
    }
}

/// Events the coordinator can emit during one decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Event {
    /// Teaching engaged; `forced` marks engagements outside the nominal
    /// boundary-crossing condition (episode start, anomaly recovery).
    Triggered { forced: bool },
    /// Control handed back to the student with the error in the
    /// self-learning set.
    Handback,
    /// Horizon expired outside the self-learning set; a fresh patch
    /// continues teaching.
    Retrigger,
    /// Error left the safety set; the episode terminates.
    SafetyViolation,
    /// The error jumped from the self-learning set past the safety set in
    /// one step, so the boundary-crossing trigger never fired.
    MissedTriggerJump,
    /// Synthesis failed even after retries; the previous gain was reused
    /// about a recomputed center.
    SynthesisFallback,
}

/// Everything a coordination decision needs besides its own state.
pub struct CoordinatorCtx<'a> {
    pub spaces: &'a SpaceConfig,
    pub teacher: &'a TeacherConfig,
    pub model: (&'a AMatrix, &'a BMatrix),
    pub step: usize,
    /// Last successful patch (or the pre-run nominal one) for fallbacks.
    pub fallback: Option<&'a Patch>,
    pub mode: RunMode,
}

fn synthesize_or_fallback(
    e_now: &TrackingError,
    ctx: &CoordinatorCtx,
    events: &mut Vec<Event>,
) -> Option<Patch> {
    match synthesize_with_retry(e_now, ctx.teacher, ctx.spaces, ctx.model, ctx.step) {
        Ok(p) => Some(p),
        Err(_) => {
            events.push(Event::SynthesisFallback);
            ctx.fallback.map(|f| Patch {
                center: srl_teacher::patch_center(e_now, ctx.spaces.chi),
                created_at: ctx.step,
                ..f.clone()
            })
        }
    }
}

/// One switching decision.
///
/// In framework mode the teacher engages when the error crosses from the
/// self-learning set into the marginal band (or immediately, flagged
/// forced, when an episode starts outside the self-learning set), holds
/// control for the teaching horizon, re-engages on expiry outside the
/// self-learning set, and hands back otherwise. An error outside the
/// safety set terminates the episode through `SafetyViolation`.
pub fn coordinate(
    cs: &CoordinatorState,
    e_prev: Option<&TrackingError>,
    e_now: &TrackingError,
    ctx: &CoordinatorCtx,
) -> (CoordinatorState, ActionSource, Vec<Event>) {
    let mut next = cs.clone();
    let mut events = Vec::new();
    let region_now = region_of(e_now, ctx.spaces).expect("validated spaces");
    let region_prev = e_prev.map(|e| region_of(e, ctx.spaces).expect("validated spaces"));

    if region_now == Region::Unsafe {
        if cs.mode == ControlMode::Student && region_prev == Some(Region::SelfLearn) {
            events.push(Event::MissedTriggerJump);
        }
        events.push(Event::SafetyViolation);
        next.last_region = region_now;
        let source = match cs.mode {
            ControlMode::Student => ActionSource::Student,
            ControlMode::Teacher => ActionSource::Teacher,
        };
        return (next, source, events);
    }

    match ctx.mode {
        RunMode::StudentOnly => {
            next.mode = ControlMode::Student;
            next.last_region = region_now;
            return (next, ActionSource::Student, events);
        }
        RunMode::TeacherOnly => {
            if next.active_patch.is_none() || next.teaching_steps_left == 0 {
                if let Some(p) = synthesize_or_fallback(e_now, ctx, &mut events) {
                    events.push(Event::Triggered { forced: true });
                    next.teaching_steps_left = p.tau;
                    next.active_patch = Some(p);
                }
            }
            next.mode = ControlMode::Teacher;
            next.teaching_steps_left = next.teaching_steps_left.saturating_sub(1);
            next.last_region = region_now;
            return (next, ActionSource::Teacher, events);
        }
        RunMode::Framework => {}
    }

    let source = match cs.mode {
        ControlMode::Student => {
            let boundary_crossing =
                region_prev == Some(Region::SelfLearn) && region_now == Region::Marginal;
            let anomalous_start = region_now == Region::Marginal && !boundary_crossing;
            if boundary_crossing || anomalous_start {
                if let Some(p) = synthesize_or_fallback(e_now, ctx, &mut events) {
                    events.push(Event::Triggered {
                        forced: anomalous_start,
                    });
                    next.mode = ControlMode::Teacher;
                    next.teaching_steps_left = p.tau - 1;
                    next.active_patch = Some(p);
                    ActionSource::Teacher
                } else {
                    // No patch to apply; the student keeps control and the
                    // fallback event is already recorded.
                    ActionSource::Student
                }
            } else {
                ActionSource::Student
            }
        }
        ControlMode::Teacher => {
            if cs.teaching_steps_left == 0 {
                // Horizon expired; decide between handback and re-teach.
                if region_now == Region::SelfLearn {
                    events.push(Event::Handback);
                    next.mode = ControlMode::Student;
                    next.active_patch = None;
                    ActionSource::Student
                } else {
                    match synthesize_or_fallback(e_now, ctx, &mut events) {
                        Some(p) => {
                            events.push(Event::Retrigger);
                            next.teaching_steps_left = p.tau - 1;
                            next.active_patch = Some(p);
                        }
                        None => {
                            next.teaching_steps_left = cs
                                .active_patch
                                .as_ref()
                                .map(|p| p.tau - 1)
                                .unwrap_or(0);
                        }
                    }
                    ActionSource::Teacher
                }
            } else {
                next.teaching_steps_left -= 1;
                ActionSource::Teacher
            }
        }
    };
    next.last_region = region_now;
    (next, source, events)
}
