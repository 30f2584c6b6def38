//! Enrollment-pool speaker assignment and causal online enrollment.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{unit_dot, Embedding, Segment, SegmentId, SpeakerId};
use crate::swm::VoteProvider;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerPool {
    pub seeds: Vec<Embedding>,
    pub online: VecDeque<Embedding>,
}

/// Per-speaker seed and online embeddings, stored normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrollmentPool {
    speakers: BTreeMap<SpeakerId, SpeakerPool>,
    capacity: usize,
    dim: usize,
}

impl EnrollmentPool {
    /// Builds a pool from seed embeddings. Every speaker needs at least one seed.
    pub fn new(seeds: BTreeMap<SpeakerId, Vec<Embedding>>, capacity: usize) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::NoEnrollments("no speakers enrolled".to_string()));
        }
        let mut dim = None;
        let mut speakers = BTreeMap::new();
        for (speaker, list) in seeds {
            if list.is_empty() {
                return Err(Error::NoEnrollments(alloc::format!(
                    "speaker `{speaker}` has no seed embedding"
                )));
            }
            let mut normed = Vec::with_capacity(list.len());
            for e in &list {
                let d = *dim.get_or_insert(e.dim());
                if e.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: e.dim(),
                    });
                }
                normed.push(e.normalized()?);
            }
            speakers.insert(
                speaker,
                SpeakerPool {
                    seeds: normed,
                    online: VecDeque::new(),
                },
            );
        }
        Ok(Self {
            speakers,
            capacity,
            dim: dim.unwrap_or(0),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn speakers(&self) -> impl Iterator<Item = &SpeakerId> {
        self.speakers.keys()
    }

    pub fn get(&self, speaker: &SpeakerId) -> Option<&SpeakerPool> {
        self.speakers.get(speaker)
    }

    /// (seed count, online count) per speaker.
    pub fn summary(&self) -> BTreeMap<SpeakerId, (usize, usize)> {
        self.speakers
            .iter()
            .map(|(s, p)| (s.clone(), (p.seeds.len(), p.online.len())))
            .collect()
    }

    /// Appends an online embedding in place, evicting the oldest when over capacity.
    pub fn enroll_online_mut(&mut self, speaker: &SpeakerId, e: &Embedding) -> Result<()> {
        let dim = self.dim;
        let cap = self.capacity;
        let pool = self
            .speakers
            .get_mut(speaker)
            .ok_or_else(|| Error::UnknownSpeaker(speaker.to_string()))?;
        if e.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: e.dim(),
            });
        }
        let u = e.normalized()?;
        if cap == 0 {
            return Ok(());
        }
        pool.online.push_back(u);
        while pool.online.len() > cap {
            pool.online.pop_front();
        }
        Ok(())
    }

    /// Returns the updated pool; `self` is left untouched.
    pub fn enroll_online(&self, speaker: &SpeakerId, e: &Embedding) -> Result<Self> {
        let mut next = self.clone();
        next.enroll_online_mut(speaker, e)?;
        Ok(next)
    }

    /// Max-cosine assignment against every speaker's seeds and online embeddings.
    pub fn assign(&self, e: &Embedding) -> Result<(SpeakerId, BTreeMap<SpeakerId, f64>)> {
        if self.speakers.is_empty() {
            return Err(Error::NoEnrollments("empty pool".to_string()));
        }
        if e.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: e.dim(),
            });
        }
        let u = e.normalized()?;
        let mut scores = BTreeMap::new();
        let mut best: Option<(&SpeakerId, f64)> = None;
        for (speaker, pool) in &self.speakers {
            let score = pool
                .seeds
                .iter()
                .chain(pool.online.iter())
                .map(|p| unit_dot(&u, p))
                .fold(f64::NEG_INFINITY, f64::max);
            // BTreeMap order: strict `>` keeps the smallest id on ties.
            if best.map_or(true, |(_, b)| score > b) {
                best = Some((speaker, score));
            }
            scores.insert(speaker.clone(), score);
        }
        let chosen = best.expect("non-empty pool").0.clone();
        Ok((chosen, scores))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentTrace {
    pub segment_id: SegmentId,
    pub chosen: SpeakerId,
    pub scores: BTreeMap<SpeakerId, f64>,
    pub source_embedding: Embedding,
}

pub fn assign_speaker(
    segment_id: &SegmentId,
    e: &Embedding,
    pool: &EnrollmentPool,
) -> Result<AssignmentTrace> {
    let (chosen, scores) = pool.assign(e)?;
    Ok(AssignmentTrace {
        segment_id: segment_id.clone(),
        chosen,
        scores,
        source_embedding: e.clone(),
    })
}

pub fn enroll_online(
    pool: &EnrollmentPool,
    speaker: &SpeakerId,
    e: &Embedding,
) -> Result<EnrollmentPool> {
    pool.enroll_online(speaker, e)
}

/// Window votes from the segment's attached window records: a recorded
/// speaker vote wins; otherwise the window embedding is matched against the pool.
pub struct WindowVotes<'a> {
    pool: &'a EnrollmentPool,
    tolerance: f64,
}

impl<'a> WindowVotes<'a> {
    pub fn new(pool: &'a EnrollmentPool) -> Self {
        Self {
            pool,
            tolerance: crate::swm::RECORDED_VOTE_TOLERANCE,
        }
    }
}

impl VoteProvider for WindowVotes<'_> {
    fn vote(&mut self, segment: &Segment, _start: f64, end: f64) -> Option<SpeakerId> {
        let rec = segment
            .windows
            .iter()
            .find(|w| (w.t - end).abs() <= self.tolerance)?;
        if let Some(s) = &rec.speaker {
            return Some(s.clone());
        }
        let e = rec.embedding.as_ref()?;
        self.pool.assign(e).ok().map(|(s, _)| s)
    }
}
