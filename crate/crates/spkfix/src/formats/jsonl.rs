//! Line-delimited JSON formats: segments, enrollment seeds, ground-truth
//! lines and stand-alone window votes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use spkfix_core::feedback::GroundTruthLine;
use spkfix_core::model::{Embedding, Segment, SegmentId, SpeakerId, WindowRecord, Word};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordRecord {
    pub w: String,
    pub s: f64,
    pub e: f64,
}

/// One sliding window: a recorded vote, a window embedding, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoteRecord {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<SpeakerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRecord {
    pub id: String,
    pub start: f64,
    pub end: f64,
    pub words: Vec<WordRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub votes: Vec<VoteRecord>,
    /// Present on transcripts written after a run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<SpeakerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

impl SegmentRecord {
    pub fn from_segment(s: &Segment) -> Self {
        Self {
            id: s.id.to_string(),
            start: s.t_start,
            end: s.t_end,
            words: s.words.iter().map(|w| WordRecord { w: w.text.clone(), s: w.start, e: w.end }).collect(),
            embedding: s.embedding.as_ref().map(|e| e.values().to_vec()),
            votes: s
                .windows
                .iter()
                .map(|w| VoteRecord {
                    t: w.t,
                    speaker: w.speaker.clone(),
                    embedding: w.embedding.as_ref().map(|e| e.values().to_vec()),
                })
                .collect(),
            speaker: s.label.clone(),
            parent: s.parent.as_ref().map(|p| p.to_string()),
        }
    }

    pub fn into_segment(self) -> Segment {
        let words = self.words.into_iter().map(|w| Word::new(w.w, w.s, w.e)).collect();
        let mut seg = Segment::new(self.id, self.start, self.end, words);
        seg.embedding = self.embedding.map(Embedding::new);
        seg.windows = self
            .votes
            .into_iter()
            .map(|v| WindowRecord { t: v.t, speaker: v.speaker, embedding: v.embedding.map(Embedding::new) })
            .collect();
        seg.label = self.speaker;
        seg.parent = self.parent.map(SegmentId::new);
        seg
    }
}

fn records<'a, T: Deserialize<'a>>(text: &'a str, file: &str) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| Error::format(file, i + 1, e.to_string()))?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

fn to_lines<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("records serialize"));
        out.push('\n');
    }
    out
}

fn check_dim(file: &str, line: usize, what: &str, found: usize, dim: Option<usize>) -> Result<()> {
    match dim {
        Some(d) if d != found => Err(Error::format(
            file,
            line,
            format!("{what} has dimension {found}, manifest declares {d}"),
        )),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSegments {
    pub segments: Vec<Segment>,
    pub warnings: Vec<String>,
}

/// Parses and validates segment records. Records out of time order are
/// stably re-sorted by start time, with a warning.
pub fn parse_segments(text: &str, file: &str, dim: Option<usize>) -> Result<ParsedSegments> {
    let mut segments = Vec::new();
    let mut warnings = Vec::new();
    for (line, rec) in records::<SegmentRecord>(text, file)? {
        if let Some(e) = &rec.embedding {
            check_dim(file, line, "embedding", e.len(), dim)?;
        }
        for v in &rec.votes {
            if let Some(e) = &v.embedding {
                check_dim(file, line, "window embedding", e.len(), dim)?;
            }
        }
        let seg = rec.into_segment();
        seg.validate().map_err(|e| Error::format(file, line, e.to_string()))?;
        segments.push(seg);
    }
    if segments.windows(2).any(|w| w[1].t_start < w[0].t_start) {
        let msg = format!("{file}: segments out of time order; re-sorted by start time");
        log::warn!("{msg}");
        warnings.push(msg);
        segments.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
    }
    Ok(ParsedSegments { segments, warnings })
}

pub fn write_segments<'a>(segments: impl IntoIterator<Item = &'a Segment>) -> String {
    to_lines(segments.into_iter().map(SegmentRecord::from_segment))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedRecord {
    speaker: SpeakerId,
    embedding: Vec<f64>,
}

pub fn parse_seeds(text: &str, file: &str, dim: Option<usize>) -> Result<BTreeMap<SpeakerId, Vec<Embedding>>> {
    let mut out: BTreeMap<SpeakerId, Vec<Embedding>> = BTreeMap::new();
    for (line, rec) in records::<SeedRecord>(text, file)? {
        check_dim(file, line, "seed embedding", rec.embedding.len(), dim)?;
        let e = Embedding::new(rec.embedding);
        e.normalized().map_err(|err| Error::format(file, line, err.to_string()))?;
        out.entry(rec.speaker).or_default().push(e);
    }
    Ok(out)
}

pub fn write_seeds(seeds: &BTreeMap<SpeakerId, Vec<Embedding>>) -> String {
    to_lines(seeds.iter().flat_map(|(s, list)| {
        list.iter().map(move |e| SeedRecord { speaker: s.clone(), embedding: e.values().to_vec() })
    }))
}

pub fn parse_ground_truth(text: &str, file: &str) -> Result<Vec<GroundTruthLine>> {
    Ok(records::<GroundTruthLine>(text, file)?.into_iter().map(|(_, r)| r).collect())
}

pub fn write_ground_truth(lines: &[GroundTruthLine]) -> String {
    to_lines(lines)
}

/// Stand-alone vote record keyed by segment id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalVote {
    pub segment: String,
    pub t: f64,
    pub speaker: SpeakerId,
}

/// Attaches votes from a separate votes file to their segments.
pub fn merge_votes(segments: &mut [Segment], text: &str, file: &str) -> Result<()> {
    let index: BTreeMap<String, usize> = segments.iter().enumerate().map(|(i, s)| (s.id.to_string(), i)).collect();
    for (line, v) in records::<ExternalVote>(text, file)? {
        let i = *index
            .get(&v.segment)
            .ok_or_else(|| Error::format(file, line, format!("unknown segment `{}`", v.segment)))?;
        segments[i].windows.push(WindowRecord { t: v.t, speaker: Some(v.speaker), embedding: None });
    }
    for s in segments.iter_mut() {
        s.windows.sort_by(|a, b| a.t.total_cmp(&b.t));
    }
    Ok(())
}
