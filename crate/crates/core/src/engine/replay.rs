use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::events::{EventBody, SessionEvent, SwmOutcome};
use super::EngineToggles;
use crate::diarization::{AssignmentTrace, EnrollmentPool};
use crate::error::{Error, Result};
use crate::model::{Embedding, SessionConfig, SpeakerId, Transcript};

pub const AUDIT_VERSION: u32 = 1;

/// Everything needed to re-derive a session: its opening parameters and the
/// full event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditLog {
    pub v: u32,
    pub config: SessionConfig,
    pub toggles: EngineToggles,
    pub seeds: BTreeMap<SpeakerId, Vec<Embedding>>,
    pub events: Vec<SessionEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub transcript: Transcript,
    pub pool: EnrollmentPool,
    /// Number of assignment traces re-derived and checked.
    pub traces_checked: usize,
}

fn mismatch(index: u64, reason: impl Into<String>) -> Error {
    Error::AuditMismatch { index, reason: reason.into() }
}

/// The trace must be exactly what the pool, as rebuilt from earlier events
/// only, decides now.
fn verify_trace(index: u64, trace: &AssignmentTrace, pool: &EnrollmentPool) -> Result<()> {
    let (chosen, scores) = pool.assign(&trace.source_embedding)?;
    if chosen != trace.chosen || scores != trace.scores {
        return Err(mismatch(
            index,
            format!("assignment of `{}` depends on state not yet recorded", trace.segment_id),
        ));
    }
    Ok(())
}

/// Rebuilds transcript and pool from an audit log, checking that indices
/// increase, every revision and enrollment refers to an earlier segment, and
/// every recorded assignment is reproduced by the pool state at its index.
pub fn replay(log: &AuditLog) -> Result<ReplayOutcome> {
    if log.v != AUDIT_VERSION {
        return Err(Error::InvalidConfig(format!("unsupported audit log version {}", log.v)));
    }
    let capacity = if log.toggles.online_enrollment { log.config.max_online_enrollments } else { 0 };
    let mut pool = EnrollmentPool::new(log.seeds.clone(), capacity)?;
    let mut transcript = Transcript::new();
    let mut last: Option<u64> = None;
    let mut traces_checked = 0;
    for ev in &log.events {
        let idx = ev.logical_index;
        if last.is_some_and(|l| idx <= l) {
            return Err(mismatch(idx, "logical indices must strictly increase"));
        }
        last = Some(idx);
        match &ev.body {
            EventBody::Segment(s) => {
                if let Some(t) = &s.trace {
                    verify_trace(idx, t, &pool)?;
                    traces_checked += 1;
                    if s.segment.label.as_ref() != Some(&t.chosen) {
                        return Err(mismatch(idx, "segment label differs from its assignment"));
                    }
                }
                if let Some(audit) = &s.swm {
                    if let SwmOutcome::Split { input_trace, .. } = &audit.outcome {
                        verify_trace(idx, input_trace, &pool)?;
                        traces_checked += 1;
                    }
                }
                transcript
                    .append(s.segment.clone(), idx)
                    .map_err(|e| mismatch(idx, e.to_string()))?;
            }
            EventBody::Revision(r) => {
                let rev = &r.revision;
                if rev.applied_at != idx {
                    return Err(mismatch(idx, "revision stamped with a different index"));
                }
                let current = transcript.get(&rev.segment_id).and_then(|s| s.label.clone());
                if current.as_ref() != Some(&rev.old_speaker) {
                    return Err(mismatch(idx, format!("revision of `{}` does not match its label", rev.segment_id)));
                }
                transcript
                    .relabel(&rev.segment_id, rev.new_speaker.clone(), rev.source, idx)
                    .map_err(|e| mismatch(idx, e.to_string()))?;
            }
            EventBody::Enrollment(en) => {
                if transcript.get(&en.segment_id).is_none() {
                    return Err(mismatch(idx, "enrollment from an unknown segment"));
                }
                pool.enroll_online_mut(&en.speaker, &en.embedding)
                    .map_err(|e| mismatch(idx, e.to_string()))?;
            }
            EventBody::Summary(_) | EventBody::LimitReached { .. } | EventBody::Error(_) => {}
        }
    }
    Ok(ReplayOutcome { transcript, pool, traces_checked })
}
