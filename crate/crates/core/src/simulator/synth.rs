//! Seeded synthetic meetings: scripted turns, clustered embeddings, injected
//! merge and confusion errors.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::MeetingBundle;
use crate::error::{Error, Result};
use crate::feedback::GroundTruthLine;
use crate::model::{
    interval_overlap, Embedding, RefInterval, ReferenceAnnotation, Segment, SpeakerId, WindowRecord, Word,
};
use crate::swm::window_ends;

const SPEAKER_NAMES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];
const MAX_CENTROID_COSINE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub speakers: usize,
    /// Meeting length in seconds.
    pub duration: f64,
    pub turn_min: f64,
    pub turn_max: f64,
    pub word_min: f64,
    pub word_max: f64,
    /// Silence between consecutive turns, drawn uniformly in `[gap_min, gap_max]`.
    pub gap_min: f64,
    pub gap_max: f64,
    pub dim: usize,
    /// Cosine between a speaker's seed centroid and its usual in-meeting voice.
    pub in_situ_cosine: f64,
    /// Per-coordinate noise scale (times 1/sqrt(dim)) on segment embeddings.
    pub spread: f64,
    /// Noise scale on window embeddings.
    pub window_spread: f64,
    /// Probability that a hypothesis segment fuses two adjacent turns.
    pub merge_rate: f64,
    /// Probability that a window vote names a wrong speaker.
    pub vote_noise: f64,
    /// Probability that a turn is voiced in the speaker's drifted mode, which
    /// the seed enrollments attribute to another speaker.
    pub confusion_rate: f64,
    pub seeds_per_speaker: usize,
    pub window: f64,
    pub stride: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            speakers: 4,
            duration: 600.0,
            turn_min: 2.0,
            turn_max: 6.0,
            word_min: 0.25,
            word_max: 0.45,
            gap_min: 0.1,
            gap_max: 0.5,
            dim: 16,
            in_situ_cosine: 0.95,
            spread: 0.25,
            window_spread: 0.35,
            merge_rate: 0.25,
            vote_noise: 0.1,
            confusion_rate: 0.15,
            seeds_per_speaker: 1,
            window: 1.0,
            stride: 0.2,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Generation(m.to_string()));
        if !(2..=SPEAKER_NAMES.len()).contains(&self.speakers) {
            return fail("speakers must be between 2 and 6");
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return fail("duration must be positive");
        }
        if !(self.turn_min > 0.0) || self.turn_min > self.turn_max {
            return fail("turn lengths must satisfy 0 < min <= max");
        }
        if self.turn_min > self.duration {
            return fail("turn length exceeds meeting duration");
        }
        if !(self.word_min > 0.0) || self.word_min > self.word_max || self.word_max > self.turn_min {
            return fail("word lengths must satisfy 0 < min <= max <= turn_min");
        }
        if self.gap_min < 0.0 || self.gap_min > self.gap_max {
            return fail("gaps must satisfy 0 <= min <= max");
        }
        if self.dim < 2 {
            return fail("embedding dimension must be >= 2");
        }
        if !(self.in_situ_cosine > 0.0 && self.in_situ_cosine <= 1.0) {
            return fail("in-situ cosine must lie in (0, 1]");
        }
        for (name, p) in [
            ("merge rate", self.merge_rate),
            ("vote noise", self.vote_noise),
            ("confusion rate", self.confusion_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Generation(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.spread < 0.0 || self.window_spread < 0.0 {
            return fail("spreads must be >= 0");
        }
        if self.seeds_per_speaker == 0 {
            return fail("at least one seed per speaker");
        }
        if !(self.window > 0.0) || !(self.stride > 0.0) {
            return fail("window and stride must be positive");
        }
        Ok(())
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal) * scale).collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = libm::sqrt(v.iter().map(|x| x * x).sum());
    v.into_iter().map(|x| x / n).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit vector at cosine `c` from unit `base`, in a random orthogonal direction.
fn rotate(rng: &mut ChaCha8Rng, base: &[f64], c: f64) -> Vec<f64> {
    let mut r = gaussian(rng, base.len(), 1.0);
    let p = dot(&r, base);
    for (x, b) in r.iter_mut().zip(base) {
        *x -= p * b;
    }
    let r = unit(r);
    let s = libm::sqrt((1.0 - c * c).max(0.0));
    base.iter().zip(&r).map(|(b, o)| c * b + s * o).collect()
}

fn mix(parts: &[(f64, &[f64])], noise: Vec<f64>) -> Embedding {
    let mut v = noise;
    for (w, m) in parts {
        for (x, y) in v.iter_mut().zip(m.iter()) {
            *x += w * y;
        }
    }
    Embedding::new(v)
}

fn vocabulary(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    const ON: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
    const NU: [&str; 5] = ["a", "e", "i", "o", "u"];
    let mut words: Vec<String> = Vec::with_capacity(n);
    while words.len() < n {
        let syllables = rng.random_range(1..=3);
        let w: String = (0..syllables)
            .map(|_| format!("{}{}", ON[rng.random_range(0..ON.len())], NU[rng.random_range(0..NU.len())]))
            .collect();
        if !words.contains(&w) {
            words.push(w);
        }
    }
    words
}

struct Turn {
    speaker: usize,
    drifted: bool,
    words: Vec<Word>,
}

impl Turn {
    fn start(&self) -> f64 {
        self.words[0].start
    }
    fn end(&self) -> f64 {
        self.words[self.words.len() - 1].end
    }
}

/// Builds a deterministic meeting from `params`.
pub fn synth_meeting(params: &SynthParams) -> Result<MeetingBundle> {
    params.validate()?;
    let p = params;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let n = p.speakers;
    let speakers: Vec<SpeakerId> = SPEAKER_NAMES[..n].iter().map(|s| SpeakerId::from(*s)).collect();

    // Seed centroids with bounded pairwise similarity.
    let mut centroids: Vec<Vec<f64>> = Vec::new();
    let mut attempts = 0;
    while centroids.len() < n {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::Generation("could not place separable speaker centroids".to_string()));
        }
        let c = unit(gaussian(&mut rng, p.dim, 1.0));
        if centroids.iter().all(|o| dot(o, &c) < MAX_CENTROID_COSINE) {
            centroids.push(c);
        }
    }
    // Usual in-meeting voice, and a drifted voice leaning toward a partner.
    let usual: Vec<Vec<f64>> = centroids.iter().map(|c| rotate(&mut rng, c, p.in_situ_cosine)).collect();
    let drifted: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            let partner = &centroids[(s + 1) % n];
            let own = &usual[s];
            unit(own.iter().zip(partner).map(|(a, b)| 0.6 * a + 0.8 * b).collect())
        })
        .collect();
    let mut seeds = BTreeMap::new();
    let seed_noise = p.spread / libm::sqrt(p.dim as f64);
    for (s, id) in speakers.iter().enumerate() {
        let list = (0..p.seeds_per_speaker)
            .map(|_| mix(&[(1.0, &centroids[s])], gaussian(&mut rng, p.dim, seed_noise)))
            .collect();
        seeds.insert(id.clone(), list);
    }

    // Scripted turns.
    let vocab = vocabulary(&mut rng, 400);
    let mut turns: Vec<Turn> = Vec::new();
    let mut t = 0.0;
    let mut prev: Option<usize> = None;
    loop {
        let len = rng.random_range(p.turn_min..=p.turn_max);
        if t + len > p.duration {
            break;
        }
        let speaker = match prev {
            None => rng.random_range(0..n),
            Some(q) => (q + rng.random_range(1..n)) % n,
        };
        let end = t + len;
        let mut words = Vec::new();
        let mut w = t;
        while w + p.word_min <= end {
            let d = rng.random_range(p.word_min..=p.word_max).min(end - w);
            words.push(Word::new(vocab[rng.random_range(0..vocab.len())].clone(), w, w + d));
            w += d + rng.random_range(0.0..=0.05);
        }
        let drifted_turn = rng.random::<f64>() < p.confusion_rate;
        turns.push(Turn { speaker, drifted: drifted_turn, words });
        prev = Some(speaker);
        t = end + rng.random_range(p.gap_min..=p.gap_max);
    }
    if turns.is_empty() {
        return Err(Error::Generation("no turn fits in the meeting".to_string()));
    }

    let reference = ReferenceAnnotation::new(
        turns
            .iter()
            .map(|tr| RefInterval {
                onset: tr.start(),
                duration: tr.end() - tr.start(),
                speaker: speakers[tr.speaker].clone(),
            })
            .collect(),
    )?;
    let ground_truth = turns
        .iter()
        .map(|tr| GroundTruthLine {
            speaker: speakers[tr.speaker].clone(),
            start: tr.start(),
            end: tr.end(),
            text: tr.words.iter().map(|w| w.text.as_str()).collect::<Vec<_>>().join(" "),
        })
        .collect();

    // Hypothesis segments: reference turns, occasionally fused in pairs.
    let voice = |tr: &Turn| -> &[f64] {
        if tr.drifted {
            &drifted[tr.speaker]
        } else {
            &usual[tr.speaker]
        }
    };
    let seg_noise = p.spread / libm::sqrt(p.dim as f64);
    let win_noise = p.window_spread / libm::sqrt(p.dim as f64);
    let mut segments = Vec::new();
    let mut i = 0;
    while i < turns.len() {
        let fuse = i + 1 < turns.len() && rng.random::<f64>() < p.merge_rate;
        let group = if fuse { &turns[i..i + 2] } else { &turns[i..i + 1] };
        i += group.len();
        let words: Vec<Word> = group.iter().flat_map(|tr| tr.words.iter().cloned()).collect();
        let (t_start, t_end) = (group[0].start(), group[group.len() - 1].end());
        let parts: Vec<(f64, &[f64])> = group.iter().map(|tr| (tr.end() - tr.start(), voice(tr))).collect();
        let embedding = mix(&parts, gaussian(&mut rng, p.dim, seg_noise * (t_end - t_start)));
        let mut windows = Vec::new();
        for at in window_ends(t_start, t_end, p.window, p.stride) {
            let a = at - p.window;
            let parts: Vec<(f64, &[f64])> = group
                .iter()
                .map(|tr| (interval_overlap(a, at, tr.start(), tr.end()), voice(tr)))
                .filter(|(w, _)| *w > 0.0)
                .collect();
            let truth = reference.dominant_speaker(a, at).map(|(s, _)| s);
            let speaker = truth.map(|s| {
                if p.vote_noise > 0.0 && rng.random::<f64>() < p.vote_noise {
                    let others: Vec<&SpeakerId> = speakers.iter().filter(|o| **o != s).collect();
                    others[rng.random_range(0..others.len())].clone()
                } else {
                    s
                }
            });
            let embedding = if parts.is_empty() {
                None
            } else {
                Some(mix(&parts, gaussian(&mut rng, p.dim, win_noise * p.window)))
            };
            windows.push(WindowRecord { t: at, speaker, embedding });
        }
        let mut seg = Segment::new(format!("s{:04}", segments.len()), t_start, t_end, words).with_embedding(embedding);
        seg.windows = windows;
        segments.push(seg);
    }

    Ok(MeetingBundle {
        meeting_id: format!("synth-{}", p.seed),
        speakers,
        dim: p.dim,
        segments,
        reference,
        ground_truth,
        seeds,
    })
}

/// The fixed 20-meeting suite used for ablations and sensitivity sweeps.
pub fn synthetic_suite(base_seed: u64, meetings: usize) -> Result<Vec<MeetingBundle>> {
    (0..meetings as u64)
        .map(|k| synth_meeting(&SynthParams { seed: base_seed + k, ..SynthParams::default() }))
        .collect()
}
