//! Seed derivation for independent simulation segments.
//!
//! Each segment of a run draws from its own ChaCha8 stream keyed by
//! [`split_seed`], so the merged output depends only on the run seed and the
//! segment partition, never on how segments were scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer, a bijection on `u64`.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of segment `segment_index`.
///
/// For a fixed run seed the map is injective in the segment index, so no two
/// segments of one run share a stream.
pub fn split_seed(seed: u64, segment_index: u64) -> u64 {
    let base = mix64(seed ^ 0x5155_5454_3153_4545);
    mix64(base.wrapping_add(segment_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

pub fn segment_rng(seed: u64, segment_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split_seed(seed, segment_index))
}
