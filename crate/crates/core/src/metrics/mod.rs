//! Diarization error rate, oracle relabeling and significance testing.

pub mod der;
pub mod stats;

use alloc::vec::Vec;

pub use der::{compute_der, Mapping, MetricsReport, Timeline, SEGMENT_MERGE_GAP};
pub use stats::{one_sample_t, student_t_sf, SignificanceResult};

use crate::error::{Error, Result};
use crate::model::{ReferenceAnnotation, Segment};

/// Relabels each segment with the reference speaker of maximum overlap
/// (ties to the smallest id). Segments without reference overlap keep
/// their label. Boundaries are untouched.
pub fn oracle_relabel<'a>(
    segments: impl IntoIterator<Item = &'a Segment>,
    reference: &ReferenceAnnotation,
) -> Vec<Segment> {
    segments
        .into_iter()
        .map(|s| {
            let mut out = s.clone();
            if let Some((spk, _)) = reference.dominant_speaker(s.t_start, s.t_end) {
                out.label = Some(spk);
            }
            out
        })
        .collect()
}

/// Relative improvement in percent: 100·(baseline − system)/baseline.
pub fn relative_improvement(baseline: f64, system: f64) -> Result<f64> {
    if !(baseline > 0.0) || !system.is_finite() {
        return Err(Error::UndefinedImprovement("baseline must be positive"));
    }
    Ok(100.0 * (baseline - system) / baseline)
}

/// Fills `im_der` and `im_serr` of `system` relative to `baseline`.
/// ImSErr uses the confusion component only.
pub fn with_improvements(system: &MetricsReport, baseline: &MetricsReport) -> Result<MetricsReport> {
    let mut out = system.clone();
    out.im_der = Some(relative_improvement(baseline.der, system.der)?);
    out.im_serr = Some(
        relative_improvement(baseline.conf, system.conf)
            .map_err(|_| Error::UndefinedImprovement("baseline confusion is zero"))?,
    );
    Ok(out)
}
