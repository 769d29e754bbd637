//! Deterministic seed splitting.
//!
//! Every random quantity in a trial is drawn from a ChaCha8 stream keyed by a
//! 64-bit seed. Seeds for sub-problems are derived with SplitMix64 so that a
//! trial's randomness depends only on `(root_seed, trial_index)` and never on
//! the worker that executes it. Sweep points reuse the same trial seeds, so
//! results at different sweep values are paired.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One SplitMix64 output step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a label.
pub fn split(parent: u64, label: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ label.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Per-trial seed `split(root, trial_index)`.
pub fn trial_seed(root: u64, trial: usize) -> u64 {
    split(root, trial as u64)
}

/// Seed of the run-wide training sequences and pilots.
pub fn sequence_seed(root: u64) -> u64 {
    split(root, u64::MAX)
}

/// Named sub-streams of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Population = 1,
    Activity = 2,
    Payload = 3,
    Noise = 4,
    TrainingSequence = 5,
    OfdmPilot = 6,
    DdPilot = 7,
    Test = 99,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split(seed, stream as u64))
}

/// Rng for an indexed item within a stream (e.g. one terminal's sequence).
pub fn item_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split(split(seed, stream as u64), index))
}
