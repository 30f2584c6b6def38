//! Simulated users: a deterministic oracle that reads the reference, and a
//! gateway-driven user prompted with the ground-truth conversation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::directive::{speaker_list, FeedbackMessage};
use super::display::DisplayWindow;
use super::gateway::{GatewayRequest, TextGateway};
use super::prompts::{fill, PromptName};
use crate::model::{interval_overlap, ReferenceAnnotation, Segment, SegmentId, SpeakerId};

/// Ground-truth utterance with times, used to build the simulation prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthLine {
    pub speaker: SpeakerId,
    pub start: f64,
    pub end: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTarget {
    pub segment_id: SegmentId,
    pub shown: SpeakerId,
    pub truth: SpeakerId,
    /// Reference time of `truth` in the segment minus that of `shown`.
    pub misattributed: f64,
}

/// Picks the segment whose displayed label loses the most reference time to
/// its majority reference speaker. Ties keep the earlier segment.
pub fn oracle_target<'a>(
    reference: &ReferenceAnnotation,
    window: impl IntoIterator<Item = &'a Segment>,
) -> Option<OracleTarget> {
    let mut best: Option<OracleTarget> = None;
    for seg in window {
        let Some(shown) = seg.label.as_ref() else {
            continue;
        };
        let overlaps = reference.overlaps(seg.t_start, seg.t_end);
        let Some((truth, truth_time)) = reference.dominant_speaker(seg.t_start, seg.t_end) else {
            continue;
        };
        if &truth == shown {
            continue;
        }
        let shown_time = overlaps.get(shown).copied().unwrap_or(0.0);
        let misattributed = truth_time - shown_time;
        if misattributed > 0.0 && best.as_ref().map_or(true, |b| misattributed > b.misattributed) {
            best = Some(OracleTarget {
                segment_id: seg.id.clone(),
                shown: shown.clone(),
                truth,
                misattributed,
            });
        }
    }
    best
}

/// Up to `n` consecutive words starting at the first word spoken (by
/// midpoint) inside the true speaker's reference time.
pub fn quote_for(seg: &Segment, truth: &SpeakerId, reference: &ReferenceAnnotation, n: usize) -> String {
    let inside = |t: f64| {
        reference
            .intervals()
            .iter()
            .any(|iv| &iv.speaker == truth && iv.onset <= t && t <= iv.end())
    };
    let first = seg.words.iter().position(|w| inside(w.midpoint())).unwrap_or(0);
    seg.words[first..]
        .iter()
        .take(n)
        .map(|w| w.text.trim())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn feedback_text(shown: &SpeakerId, quote: &str, truth: &SpeakerId) -> String {
    format!("Hey COBI: Predicted {shown}, saying \"{quote}\", was actually {truth}.")
}

/// Deterministic oracle user over the displayed window.
pub fn oracle_user<'a>(
    reference: &ReferenceAnnotation,
    window: impl IntoIterator<Item = &'a Segment> + Clone,
    quote_words: usize,
) -> Option<FeedbackMessage> {
    let target = oracle_target(reference, window.clone())?;
    let seg = window.into_iter().find(|s| s.id == target.segment_id)?;
    let quote = quote_for(seg, &target.truth, reference, quote_words);
    FeedbackMessage::new(feedback_text(&target.shown, &quote, &target.truth)).ok()
}

/// Gateway-simulated user. Returns `None` when the gateway fails, declines,
/// or answers without the wake word.
pub fn simulate_user(
    truth: &[GroundTruthLine],
    display: &DisplayWindow,
    window_span: (f64, f64),
    speakers: &[SpeakerId],
    llm: &mut dyn TextGateway,
) -> Option<FeedbackMessage> {
    let (a, b) = window_span;
    let conversation = truth
        .iter()
        .filter(|l| interval_overlap(a, b, l.start, l.end) > 0.0)
        .map(|l| format!("{}: {}", l.speaker, l.text))
        .collect::<Vec<_>>()
        .join("\n");
    let request = GatewayRequest {
        prompt_name: PromptName::FeedbackSimulation,
        filled_template: fill(
            PromptName::FeedbackSimulation,
            &[&conversation, &display.text, &speaker_list(speakers)],
        ),
    };
    let resp = llm.complete(&request).ok()?;
    FeedbackMessage::new(resp.text.trim()).ok()
}
