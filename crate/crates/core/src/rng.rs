//! Deterministic per-shard random streams.
//!
//! Every sample or shard gets its own generator derived from `(seed, index)`,
//! so results do not depend on how work is spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type LabRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, index: u64) -> LabRng {
    LabRng::seed_from_u64(mix(seed ^ mix(index)))
}
