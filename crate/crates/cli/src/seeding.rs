//! Per-run random streams.
//!
//! Every run gets its own ChaCha8 stream seeded by folding the master seed
//! with the run coordinates through SplitMix64. Runs never share a stream,
//! and the seed of a run does not depend on which other runs are in the
//! grid or on the order they execute in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a of a label; stable across platforms and releases.
pub fn label_tag(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed of one run: `master`, dimension, a cell key (the bits of `alpha`
/// for the benchmark grid, the case index for skew runs), a label tag and
/// the replicate index, folded in that order.
pub fn run_seed(master: u64, n: usize, key: u64, tag: u64, replicate: usize) -> u64 {
    [n as u64, key, tag, replicate as u64]
        .iter()
        .fold(splitmix64(master), |h, v| splitmix64(h ^ v))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
