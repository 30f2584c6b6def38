//! The summarize → present → parse feedback → correct cycle.

pub mod directive;
pub mod display;
pub mod gateway;
pub mod locate;
pub mod prompts;
pub mod user;

use alloc::collections::BTreeSet;
use alloc::string::ToString;

use serde::{Deserialize, Serialize};

pub use directive::{parse_directive, parse_feedback, CorrectionDirective, FeedbackMessage, WAKE_WORD};
pub use display::{render_display, DisplayWindow};
pub use gateway::{
    request_key, EchoGateway, GatewayRequest, GatewayResponse, RuleBasedGateway, ScriptedGateway,
    TextGateway,
};
pub use locate::locate_target;
pub use prompts::PromptName;
pub use user::{oracle_target, oracle_user, simulate_user, GroundTruthLine, OracleTarget};

use crate::diarization::EnrollmentPool;
use crate::error::{Error, Result};
use crate::model::{Embedding, Revision, RevisionSource, SegmentId, SpeakerId, Transcript};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopState {
    pub correction_limit: usize,
    pub corrections_used: usize,
    pub segments_since_summary: usize,
    pub limit_reached: bool,
    /// Segments whose embedding was already enrolled online.
    pub enrolled_segments: BTreeSet<SegmentId>,
}

impl LoopState {
    pub fn new(correction_limit: usize) -> Self {
        Self {
            correction_limit,
            corrections_used: 0,
            segments_since_summary: 0,
            limit_reached: correction_limit == 0,
            enrolled_segments: BTreeSet::new(),
        }
    }

    pub fn budget_left(&self) -> bool {
        self.corrections_used < self.correction_limit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedCorrection {
    pub revision: Revision,
    /// Online enrollment performed for this correction, if any.
    pub enrolled: Option<(SpeakerId, Embedding)>,
}

/// Relabels the target segment and, when `online_enrollment` is set,
/// enrolls its embedding for the corrected speaker (once per segment).
/// Nothing is mutated on error.
pub fn apply_correction(
    segment_id: &SegmentId,
    directive: &CorrectionDirective,
    transcript: &mut Transcript,
    pool: &mut EnrollmentPool,
    state: &mut LoopState,
    online_enrollment: bool,
    source: RevisionSource,
    applied_at: u64,
) -> Result<AppliedCorrection> {
    if !state.budget_left() {
        return Err(Error::BudgetExhausted);
    }
    let seg = transcript
        .get(segment_id)
        .ok_or_else(|| Error::UnknownSegment(segment_id.to_string()))?;
    let current = seg.label.clone();
    if current.as_ref() != Some(&directive.original_speaker_id) {
        return Err(Error::StaleCorrection {
            id: segment_id.to_string(),
            expected: directive.original_speaker_id.to_string(),
            current: current.map_or_else(|| "none".to_string(), |s| s.to_string()),
        });
    }
    let embedding = seg.embedding.clone();
    let enroll = online_enrollment
        && pool.capacity() > 0
        && embedding.is_some()
        && !state.enrolled_segments.contains(segment_id);
    if enroll {
        // Validate before mutating anything.
        let e = embedding.as_ref().expect("checked");
        if pool.get(&directive.corrected_speaker_id).is_none() {
            return Err(Error::UnknownSpeaker(directive.corrected_speaker_id.to_string()));
        }
        e.normalized()?;
    }
    let revision = transcript.relabel(
        segment_id,
        directive.corrected_speaker_id.clone(),
        source,
        applied_at,
    )?;
    let enrolled = if enroll {
        let e = embedding.expect("checked");
        pool.enroll_online_mut(&directive.corrected_speaker_id, &e)?;
        state.enrolled_segments.insert(segment_id.clone());
        Some((directive.corrected_speaker_id.clone(), e))
    } else {
        None
    };
    state.corrections_used += 1;
    state.limit_reached = state.corrections_used >= state.correction_limit;
    Ok(AppliedCorrection { revision, enrolled })
}
