//! Seed derivation for independent random streams.
//!
//! Every randomized task (a snapshot, a k-means restart) draws from its own
//! ChaCha8 stream seeded with `stream_seed(seed, stream_id)`, so results do
//! not depend on execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(seed ^ splitmix64(stream_id))`.
pub fn stream_seed(seed: u64, stream_id: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream_id))
}

pub fn stream_rng(seed: u64, stream_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, stream_id))
}
