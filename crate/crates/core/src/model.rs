//! Shared domain types: words, segments, embeddings, speakers, reference
//! annotations, the append-only transcript and the session configuration.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed between word times and segment bounds (ASR timestamp jitter).
pub const WORD_BOUNDARY_TOLERANCE: f64 = 0.05;

/// Speaker token, e.g. `"A"`. Ordering is lexicographic and drives every tie-break.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpeakerId(String);

impl SpeakerId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let trimmed = id.trim();
        if trimmed.is_empty() {
            return Err(Error::UnknownSpeaker(id));
        }
        Ok(Self(trimmed.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SpeakerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Convenience for tests and fixtures; panics on an empty token.
impl From<&str> for SpeakerId {
    fn from(s: &str) -> Self {
        SpeakerId::new(s).expect("speaker id must be non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentId(String);

impl SegmentId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Child id for one side of a split.
    pub fn child(&self, side: &str) -> Self {
        Self(format!("{}.{}", self.0, side))
    }
}

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SegmentId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Word {
    pub text: String,
    pub start: f64,
    pub end: f64,
}

impl Word {
    pub fn new(text: impl Into<String>, start: f64, end: f64) -> Self {
        Self {
            text: text.into(),
            start,
            end,
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

/// Dense speaker embedding. Operations consume the L2-normalized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.0.iter().map(|v| v * v).sum())
    }

    /// Unit-norm copy. Fails on zero norm or non-finite entries.
    pub fn normalized(&self) -> Result<Embedding> {
        if self.0.is_empty() || self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateEmbedding);
        }
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::DegenerateEmbedding);
        }
        Ok(Embedding(self.0.iter().map(|v| v / n).collect()))
    }

    /// Normalized mean of a set of embeddings.
    pub fn mean_of<'a>(items: impl IntoIterator<Item = &'a Embedding>) -> Result<Embedding> {
        let mut acc: Vec<f64> = Vec::new();
        for e in items {
            let u = e.normalized()?;
            if acc.is_empty() {
                acc = u.0;
            } else {
                if acc.len() != u.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: acc.len(),
                        found: u.dim(),
                    });
                }
                for (a, b) in acc.iter_mut().zip(u.0.iter()) {
                    *a += b;
                }
            }
        }
        Embedding(acc).normalized()
    }
}

/// Normalizes `e` to unit L2 norm.
pub fn normalize(e: &Embedding) -> Result<Embedding> {
    e.normalized()
}

/// Cosine similarity of two non-degenerate embeddings of equal dimension.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let ua = a.normalized()?;
    let ub = b.normalized()?;
    Ok(unit_dot(&ua, &ub))
}

/// Dot product of two already-normalized embeddings, clamped to [-1, 1].
pub(crate) fn unit_dot(a: &Embedding, b: &Embedding) -> f64 {
    let d: f64 = a.0.iter().zip(b.0.iter()).map(|(x, y)| x * y).sum();
    d.clamp(-1.0, 1.0)
}

/// One sliding-window observation attached to a segment by the front end:
/// a precomputed speaker vote, a window embedding, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    /// Window end time.
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<SpeakerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Embedding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: SegmentId,
    pub t_start: f64,
    pub t_end: f64,
    pub words: Vec<Word>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Embedding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<SpeakerId>,
    /// Set on the two halves produced by a split.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<SegmentId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub windows: Vec<WindowRecord>,
}

impl Segment {
    pub fn new(id: impl Into<String>, t_start: f64, t_end: f64, words: Vec<Word>) -> Self {
        Self {
            id: SegmentId::new(id),
            t_start,
            t_end,
            words,
            embedding: None,
            label: None,
            parent: None,
            windows: Vec::new(),
        }
    }

    pub fn with_embedding(mut self, e: Embedding) -> Self {
        self.embedding = Some(e);
        self
    }

    pub fn with_label(mut self, s: SpeakerId) -> Self {
        self.label = Some(s);
        self
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Space-joined word texts.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(w.text.trim());
        }
        out
    }

    /// Checks time ordering, word containment (within the boundary tolerance)
    /// and word sanity.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidSegment {
            id: self.id.0.clone(),
            reason,
        };
        if !self.t_start.is_finite() || !self.t_end.is_finite() || self.t_start > self.t_end {
            return Err(bad(format!("bounds [{}, {}]", self.t_start, self.t_end)));
        }
        let mut prev_start = f64::NEG_INFINITY;
        for (k, w) in self.words.iter().enumerate() {
            if w.text.trim().is_empty() {
                return Err(bad(format!("word {k} is empty")));
            }
            if !(w.start <= w.end) {
                return Err(bad(format!("word {k} has start > end")));
            }
            if w.start < prev_start {
                return Err(bad(format!("word {k} out of order")));
            }
            if w.start < self.t_start - WORD_BOUNDARY_TOLERANCE
                || w.end > self.t_end + WORD_BOUNDARY_TOLERANCE
            {
                return Err(bad(format!("word {k} outside segment bounds")));
            }
            prev_start = w.start;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefInterval {
    pub onset: f64,
    pub duration: f64,
    pub speaker: SpeakerId,
}

impl RefInterval {
    pub fn end(&self) -> f64 {
        self.onset + self.duration
    }
}

/// Ground-truth speaker intervals. Same-speaker overlaps are merged on
/// construction; cross-speaker overlap (overlapped speech) is kept.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceAnnotation {
    intervals: Vec<RefInterval>,
}

impl ReferenceAnnotation {
    pub fn new(intervals: Vec<RefInterval>) -> Result<Self> {
        let mut by_speaker: BTreeMap<SpeakerId, Vec<(f64, f64)>> = BTreeMap::new();
        for iv in intervals {
            if !iv.onset.is_finite() || !iv.duration.is_finite() || iv.duration <= 0.0 {
                return Err(Error::InvalidReference(format!(
                    "interval for `{}` at {} has non-positive duration {}",
                    iv.speaker, iv.onset, iv.duration
                )));
            }
            by_speaker
                .entry(iv.speaker)
                .or_default()
                .push((iv.onset, iv.onset + iv.duration));
        }
        let mut merged = Vec::new();
        for (speaker, spans) in by_speaker {
            for (a, b) in merge_spans(spans, 0.0) {
                merged.push(RefInterval {
                    onset: a,
                    duration: b - a,
                    speaker: speaker.clone(),
                });
            }
        }
        merged.sort_by(|x, y| {
            x.onset
                .total_cmp(&y.onset)
                .then_with(|| x.speaker.cmp(&y.speaker))
        });
        Ok(Self { intervals: merged })
    }

    pub fn intervals(&self) -> &[RefInterval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn speakers(&self) -> Vec<SpeakerId> {
        let mut v: Vec<SpeakerId> = self.intervals.iter().map(|i| i.speaker.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Per-speaker overlap duration with `[a, b]`; speakers with no overlap are omitted.
    pub fn overlaps(&self, a: f64, b: f64) -> BTreeMap<SpeakerId, f64> {
        let mut out = BTreeMap::new();
        for iv in &self.intervals {
            let o = interval_overlap(a, b, iv.onset, iv.end());
            if o > 0.0 {
                *out.entry(iv.speaker.clone()).or_insert(0.0) += o;
            }
        }
        out
    }

    /// Speaker with the largest overlap in `[a, b]` (ties: smallest id).
    pub fn dominant_speaker(&self, a: f64, b: f64) -> Option<(SpeakerId, f64)> {
        let mut best: Option<(SpeakerId, f64)> = None;
        for (s, o) in self.overlaps(a, b) {
            if best.as_ref().map_or(true, |(_, bo)| o > *bo) {
                best = Some((s, o));
            }
        }
        best
    }
}

pub(crate) fn interval_overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Sorts spans and merges those overlapping or separated by less than `gap`.
pub(crate) fn merge_spans(mut spans: Vec<(f64, f64)>, gap: f64) -> Vec<(f64, f64)> {
    spans.retain(|(a, b)| b > a);
    spans.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
    for (a, b) in spans {
        match out.last_mut() {
            Some(last) if a <= last.1 + gap => {
                if b > last.1 {
                    last.1 = b;
                }
            }
            _ => out.push((a, b)),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RevisionSource {
    User,
    SimulatedUser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Revision {
    pub segment_id: SegmentId,
    pub old_speaker: SpeakerId,
    pub new_speaker: SpeakerId,
    pub source: RevisionSource,
    pub applied_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub segment: Segment,
    pub assigned_at: u64,
}

/// Causal, append-only log of labeled segments. Corrections only touch
/// labels and append revisions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
    revisions: Vec<Revision>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn revisions(&self) -> &[Revision] {
        &self.revisions
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.entries.iter().map(|e| &e.segment)
    }

    pub fn get(&self, id: &SegmentId) -> Option<&Segment> {
        self.position(id).map(|i| &self.entries[i].segment)
    }

    fn position(&self, id: &SegmentId) -> Option<usize> {
        self.entries.iter().rposition(|e| &e.segment.id == id)
    }

    pub fn append(&mut self, segment: Segment, assigned_at: u64) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if segment.t_start < last.segment.t_start {
                return Err(Error::OutOfOrder {
                    id: segment.id.0.clone(),
                    start: segment.t_start,
                    previous: last.segment.t_start,
                });
            }
        }
        if self.position(&segment.id).is_some() {
            return Err(Error::InvalidSegment {
                id: segment.id.0.clone(),
                reason: "duplicate segment id".to_string(),
            });
        }
        self.entries.push(TranscriptEntry {
            segment,
            assigned_at,
        });
        Ok(())
    }

    /// Relabels one segment and records the revision.
    pub fn relabel(
        &mut self,
        id: &SegmentId,
        new_speaker: SpeakerId,
        source: RevisionSource,
        applied_at: u64,
    ) -> Result<Revision> {
        let pos = self
            .position(id)
            .ok_or_else(|| Error::UnknownSegment(id.0.clone()))?;
        let seg = &mut self.entries[pos].segment;
        let old = seg
            .label
            .clone()
            .ok_or_else(|| Error::InvalidSegment {
                id: id.0.clone(),
                reason: "segment has no label".to_string(),
            })?;
        if old == new_speaker {
            return Err(Error::InvalidDirective(format!(
                "segment `{id}` is already labeled `{new_speaker}`"
            )));
        }
        seg.label = Some(new_speaker.clone());
        let rev = Revision {
            segment_id: id.clone(),
            old_speaker: old,
            new_speaker,
            source,
            applied_at,
        };
        self.revisions.push(rev.clone());
        Ok(rev)
    }

    /// `"<speaker>: <words>"` for the last `k` entries, oldest first.
    pub fn tail_lines(&self, k: usize) -> Vec<String> {
        let start = self.entries.len().saturating_sub(k);
        self.entries[start..]
            .iter()
            .map(|e| render_line(&e.segment))
            .collect()
    }
}

pub fn render_line(seg: &Segment) -> String {
    let label = seg.label.as_ref().map_or("?", |s| s.as_str());
    format!("{}: {}", label, seg.text())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisplayMode {
    Summary,
    Conversation,
}

impl DisplayMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DisplayMode::Summary => "summary",
            DisplayMode::Conversation => "conversation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "summary" => Some(DisplayMode::Summary),
            "conversation" => Some(DisplayMode::Conversation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub swm_window: f64,
    pub swm_stride: f64,
    pub dominance: f64,
    pub summary_interval: usize,
    pub correction_limit: usize,
    pub max_online_enrollments: usize,
    pub display_mode: DisplayMode,
    pub correction_context_turns: usize,
    pub collar: f64,
    /// Minimum token F1 for fuzzy sentence matching when locating a correction target.
    pub match_threshold: f64,
}

impl SessionConfig {
    /// Defaults, with the online-enrollment cap chosen by whether SWM runs.
    pub fn defaults_for(swm_enabled: bool) -> Self {
        Self {
            swm_window: 1.0,
            swm_stride: 0.2,
            dominance: 0.7,
            summary_interval: 15,
            correction_limit: 30,
            max_online_enrollments: if swm_enabled { 1 } else { 2 },
            display_mode: DisplayMode::Summary,
            correction_context_turns: 15,
            collar: 0.0,
            match_threshold: 0.6,
        }
    }

    /// Sets the summary interval and keeps the correction context aligned with it.
    pub fn with_interval(mut self, interval: usize) -> Self {
        self.summary_interval = interval;
        self.correction_context_turns = interval;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.swm_window > 0.0) || !self.swm_window.is_finite() {
            return fail("swm window must be > 0");
        }
        if !(self.swm_stride > 0.0) || self.swm_stride > self.swm_window {
            return fail("swm stride must satisfy 0 < stride <= window");
        }
        if !(self.dominance > 0.0) || self.dominance > 1.0 {
            return fail("dominance threshold must lie in (0, 1]");
        }
        if self.summary_interval == 0 {
            return fail("summary interval must be >= 1");
        }
        if self.correction_context_turns == 0 {
            return fail("correction context must be >= 1");
        }
        if !(self.collar >= 0.0) {
            return fail("collar must be >= 0");
        }
        if !(self.match_threshold > 0.0) || self.match_threshold > 1.0 {
            return fail("match threshold must lie in (0, 1]");
        }
        Ok(())
    }
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self::defaults_for(true)
    }
}
