//! Human-in-the-loop correction of speaker-attributed transcripts.
//!
//! The crate is `no_std` (with `alloc`) and deterministic: every container
//! that is iterated is ordered, and randomness only comes from seeded RNGs.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diarization;
pub mod engine;
pub mod error;
pub mod feedback;
pub mod metrics;
pub mod model;
pub mod simulator;
pub mod swm;
pub mod text;

pub use error::{Error, Result};
