//! Split-When-Merged: window votes are binned onto words, each word takes
//! the mode of its bin, and a segment whose labels are not dominated by one
//! speaker is split once at the index maximizing left/right majority agreement.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{ReferenceAnnotation, Segment, SpeakerId};

const TIME_EPS: f64 = 1e-9;
const FRACTION_EPS: f64 = 1e-12;

/// Answers "who is speaking in `[start, end]` of this segment?".
pub trait VoteProvider {
    fn vote(&mut self, segment: &Segment, start: f64, end: f64) -> Option<SpeakerId>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowVote {
    /// Window end time.
    pub at: f64,
    pub speaker: SpeakerId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordLabeling {
    pub labels: Vec<SpeakerId>,
    pub bins: Vec<Vec<SpeakerId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnsplitReason {
    Dominance,
    SameMajority,
    DegenerateIndex,
    NoVotes,
    SingleWord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPoint {
    /// Number of words on the left side (1 ≤ index < n).
    pub index: usize,
    pub left: SpeakerId,
    pub right: SpeakerId,
    pub score: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum SplitResult {
    Unsplit { reason: UnsplitReason },
    Split {
        point: SplitPoint,
        left: Segment,
        right: Segment,
    },
}

impl SplitResult {
    pub fn is_split(&self) -> bool {
        matches!(self, SplitResult::Split { .. })
    }

    pub fn reason(&self) -> Option<UnsplitReason> {
        match self {
            SplitResult::Unsplit { reason } => Some(*reason),
            SplitResult::Split { .. } => None,
        }
    }
}

/// Window end times `t_s + W + kΔ` up to `t_e` inclusive.
pub fn window_ends(t_start: f64, t_end: f64, window: f64, stride: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(window > 0.0) || !(stride > 0.0) {
        return out;
    }
    let mut k = 0u64;
    loop {
        let t = t_start + window + (k as f64) * stride;
        if t > t_end + TIME_EPS {
            break;
        }
        out.push(t);
        k += 1;
    }
    out
}

pub fn collect_votes(
    segment: &Segment,
    provider: &mut dyn VoteProvider,
    window: f64,
    stride: f64,
) -> Vec<WindowVote> {
    window_ends(segment.t_start, segment.t_end, window, stride)
        .into_iter()
        .filter_map(|t| {
            provider
                .vote(segment, t - window, t)
                .map(|speaker| WindowVote { at: t, speaker })
        })
        .collect()
}

/// Smallest-id mode of a non-empty multiset.
fn mode(votes: &[SpeakerId]) -> Option<SpeakerId> {
    let mut counts: BTreeMap<&SpeakerId, usize> = BTreeMap::new();
    for v in votes {
        *counts.entry(v).or_insert(0) += 1;
    }
    let mut best: Option<(&SpeakerId, usize)> = None;
    for (s, c) in counts {
        if best.map_or(true, |(_, bc)| c > bc) {
            best = Some((s, c));
        }
    }
    best.map(|(s, _)| s.clone())
}

/// Assigns each vote to the word with the nearest midpoint (ties: earlier
/// word), takes the mode per bin and fills empty bins from the nearest
/// non-empty bin by word index (ties: earlier). `None` when no vote landed.
pub fn bin_votes(segment: &Segment, votes: &[WindowVote]) -> Option<WordLabeling> {
    let n = segment.words.len();
    if n == 0 || votes.is_empty() {
        return None;
    }
    let mids: Vec<f64> = segment.words.iter().map(|w| w.midpoint()).collect();
    let mut bins: Vec<Vec<SpeakerId>> = alloc::vec![Vec::new(); n];
    for v in votes {
        let mut best = 0usize;
        let mut best_d = (mids[0] - v.at).abs();
        for (k, m) in mids.iter().enumerate().skip(1) {
            let d = (m - v.at).abs();
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        bins[best].push(v.speaker.clone());
    }
    let modes: Vec<Option<SpeakerId>> = bins.iter().map(|b| mode(b)).collect();
    let filled: Vec<usize> = (0..n).filter(|&k| modes[k].is_some()).collect();
    let labels = (0..n)
        .map(|k| {
            if let Some(s) = &modes[k] {
                return s.clone();
            }
            // `filled` is sorted, so the first minimum is the earlier word.
            let src = filled
                .iter()
                .copied()
                .min_by_key(|&j| j.abs_diff(k))
                .expect("at least one bin is non-empty");
            modes[src].clone().expect("filled bin has a mode")
        })
        .collect();
    Some(WordLabeling { labels, bins })
}

/// Dominant speaker (ties: smallest id) and its share of the labels.
pub fn dominant_fraction(labels: &[SpeakerId]) -> Option<(SpeakerId, f64)> {
    let s = mode(labels)?;
    let c = labels.iter().filter(|l| **l == s).count();
    Some((s, c as f64 / labels.len() as f64))
}

pub fn is_dominated(labels: &[SpeakerId], theta: f64) -> bool {
    dominant_fraction(labels).is_some_and(|(_, f)| f + FRACTION_EPS >= theta)
}

/// Best single split over `1 ≤ i < n`; score ties go to the smallest `i`,
/// majority ties on either side to the smallest speaker id.
pub fn best_split(labels: &[SpeakerId]) -> Option<SplitPoint> {
    let n = labels.len();
    if n < 2 {
        return None;
    }
    let mut speakers: Vec<&SpeakerId> = labels.iter().collect();
    speakers.sort();
    speakers.dedup();
    let idx = |s: &SpeakerId| speakers.binary_search(&s).expect("speaker present");
    let codes: Vec<usize> = labels.iter().map(idx).collect();
    let m = speakers.len();
    let mut left = alloc::vec![0usize; m];
    let mut right = alloc::vec![0usize; m];
    for &c in &codes {
        right[c] += 1;
    }
    // First maximum in index order = smallest id on ties.
    let argmax = |counts: &[usize]| {
        let mut b = 0;
        for j in 1..counts.len() {
            if counts[j] > counts[b] {
                b = j;
            }
        }
        b
    };
    let mut best: Option<SplitPoint> = None;
    for i in 1..n {
        let c = codes[i - 1];
        left[c] += 1;
        right[c] -= 1;
        let (l, r) = (argmax(&left), argmax(&right));
        let score = left[l] + right[r];
        if best.as_ref().map_or(true, |b| score > b.score) {
            best = Some(SplitPoint {
                index: i,
                left: speakers[l].clone(),
                right: speakers[r].clone(),
                score,
            });
        }
    }
    best
}

pub fn split_when_merged(segment: &Segment, labeling: &WordLabeling, theta: f64) -> SplitResult {
    let labels = &labeling.labels;
    let n = labels.len();
    if n == 0 || n != segment.words.len() {
        return SplitResult::Unsplit {
            reason: UnsplitReason::DegenerateIndex,
        };
    }
    if is_dominated(labels, theta) {
        return SplitResult::Unsplit {
            reason: UnsplitReason::Dominance,
        };
    }
    if n == 1 {
        return SplitResult::Unsplit {
            reason: UnsplitReason::SingleWord,
        };
    }
    let point = best_split(labels).expect("n >= 2");
    if point.left == point.right {
        return SplitResult::Unsplit {
            reason: UnsplitReason::SameMajority,
        };
    }
    let i = point.index;
    let words = &segment.words;
    let mut left = Segment::new(
        segment.id.child("L").as_str(),
        words[0].start,
        words[i - 1].end,
        words[..i].to_vec(),
    )
    .with_label(point.left.clone());
    let mut right = Segment::new(
        segment.id.child("R").as_str(),
        words[i].start,
        words[n - 1].end,
        words[i..].to_vec(),
    )
    .with_label(point.right.clone());
    left.parent = Some(segment.id.clone());
    right.parent = Some(segment.id.clone());
    SplitResult::Split { point, left, right }
}

/// Full pass over one segment: gather votes, bin them, attempt the split.
pub fn process_segment(
    segment: &Segment,
    provider: &mut dyn VoteProvider,
    window: f64,
    stride: f64,
    theta: f64,
) -> (Vec<WindowVote>, SplitResult) {
    if segment.words.len() == 1 {
        return (
            Vec::new(),
            SplitResult::Unsplit {
                reason: UnsplitReason::SingleWord,
            },
        );
    }
    let votes = collect_votes(segment, provider, window, stride);
    let result = match bin_votes(segment, &votes) {
        None => SplitResult::Unsplit {
            reason: UnsplitReason::NoVotes,
        },
        Some(labeling) => split_when_merged(segment, &labeling, theta),
    };
    (votes, result)
}

/// Looks up precomputed speaker votes attached to the segment's window records.
#[derive(Debug, Default, Clone, Copy)]
pub struct RecordedVotes;

/// Window-time matching tolerance for recorded votes.
pub const RECORDED_VOTE_TOLERANCE: f64 = 1e-3;

impl VoteProvider for RecordedVotes {
    fn vote(&mut self, segment: &Segment, _start: f64, end: f64) -> Option<SpeakerId> {
        segment
            .windows
            .iter()
            .filter(|w| (w.t - end).abs() <= RECORDED_VOTE_TOLERANCE)
            .find_map(|w| w.speaker.clone())
    }
}

/// Synthetic votes: the reference speaker with the largest overlap in the
/// window, replaced by a uniformly drawn other speaker with probability `noise`.
pub struct ReferenceVotes<'a> {
    reference: &'a ReferenceAnnotation,
    speakers: Vec<SpeakerId>,
    noise: f64,
    rng: &'a mut ChaCha8Rng,
}

impl<'a> ReferenceVotes<'a> {
    pub fn new(
        reference: &'a ReferenceAnnotation,
        speakers: Vec<SpeakerId>,
        noise: f64,
        rng: &'a mut ChaCha8Rng,
    ) -> Self {
        Self {
            reference,
            speakers,
            noise,
            rng,
        }
    }
}

impl VoteProvider for ReferenceVotes<'_> {
    fn vote(&mut self, _segment: &Segment, start: f64, end: f64) -> Option<SpeakerId> {
        let (truth, _) = self.reference.dominant_speaker(start, end)?;
        if self.noise > 0.0 && self.speakers.len() > 1 && self.rng.random::<f64>() < self.noise {
            let others: Vec<&SpeakerId> = self.speakers.iter().filter(|s| **s != truth).collect();
            let pick = self.rng.random_range(0..others.len());
            return Some(others[pick].clone());
        }
        Some(truth)
    }
}
