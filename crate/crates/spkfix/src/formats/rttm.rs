//! RTTM reference/hypothesis files (`SPEAKER` records only).

use std::fmt::Write as _;

use spkfix_core::metrics::Timeline;
use spkfix_core::model::{RefInterval, ReferenceAnnotation, SpeakerId};

use crate::error::{Error, Result};

/// Parses RTTM text. Non-`SPEAKER` records, blank lines and `;;`/`#`
/// comments are skipped; same-speaker overlaps are merged.
pub fn parse_rttm(text: &str, file: &str) -> Result<ReferenceAnnotation> {
    let mut intervals = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(";;") || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 9 {
            return Err(Error::format(file, lineno, format!("expected at least 9 fields, found {}", fields.len())));
        }
        if fields[0] != "SPEAKER" {
            continue;
        }
        let num = |k: usize, what: &str| -> Result<f64> {
            fields[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::format(file, lineno, format!("bad {what} `{}`", fields[k])))
        };
        let onset = num(3, "onset")?;
        let duration = num(4, "duration")?;
        if duration < 0.0 {
            return Err(Error::Validation(format!("{file}:{lineno}: negative duration {duration}")));
        }
        if duration == 0.0 {
            log::warn!("{file}:{lineno}: skipping zero-duration interval");
            continue;
        }
        let speaker = SpeakerId::new(fields[7]).map_err(|e| Error::format(file, lineno, e.to_string()))?;
        intervals.push(RefInterval { onset, duration, speaker });
    }
    Ok(ReferenceAnnotation::new(intervals)?)
}

pub fn write_rttm(file_id: &str, reference: &ReferenceAnnotation) -> String {
    let mut out = String::new();
    for iv in reference.intervals() {
        let _ = writeln!(out, "SPEAKER {file_id} 1 {} {} <NA> <NA> {} <NA> <NA>", iv.onset, iv.duration, iv.speaker);
    }
    out
}

/// Hypothesis timeline as RTTM, sorted by onset then speaker.
pub fn write_timeline_rttm(file_id: &str, timeline: &Timeline) -> String {
    let mut rows: Vec<(f64, f64, &SpeakerId)> = timeline
        .speakers()
        .flat_map(|(s, spans)| spans.iter().map(move |&(a, b)| (a, b - a, s)))
        .collect();
    rows.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.2.cmp(y.2)));
    let mut out = String::new();
    for (a, d, s) in rows {
        let _ = writeln!(out, "SPEAKER {file_id} 1 {a} {d} <NA> <NA> {s} <NA> <NA>");
    }
    out
}
