use crate::error::{Error, Result};
use crate::model::{SegmentId, Transcript};
use crate::text::{normalize_text, token_f1};

use super::directive::CorrectionDirective;

/// Finds the segment a directive refers to among the last `k` transcript
/// entries carrying the directive's original speaker. An exact normalized
/// match wins; otherwise the best token F1 at or above `threshold`. Ties go
/// to the most recent segment.
pub fn locate_target(
    directive: &CorrectionDirective,
    transcript: &Transcript,
    k: usize,
    threshold: f64,
) -> Result<SegmentId> {
    let entries = transcript.entries();
    let start = entries.len().saturating_sub(k);
    let target = normalize_text(&directive.original_sentence);
    let candidates = entries[start..]
        .iter()
        .rev()
        .map(|e| &e.segment)
        .filter(|s| s.label.as_ref() == Some(&directive.original_speaker_id));

    let mut best: Option<(&SegmentId, f64)> = None;
    for seg in candidates {
        let text = seg.text();
        if normalize_text(&text) == target {
            return Ok(seg.id.clone());
        }
        let f1 = token_f1(&directive.original_sentence, &text);
        // Iterating newest first, so strict `>` keeps the most recent on ties.
        if best.map_or(true, |(_, b)| f1 > b) {
            best = Some((&seg.id, f1));
        }
    }
    match best {
        Some((id, f1)) if f1 >= threshold => Ok(id.clone()),
        Some((_, f1)) => Err(Error::TargetNotFound { best_f1: f1 }),
        None => Err(Error::TargetNotFound { best_f1: 0.0 }),
    }
}
