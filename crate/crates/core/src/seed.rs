//! Hierarchical seed derivation.
//!
//! Every Monte-Carlo trial owns a ChaCha8 stream seeded from a hash of
//! `(base seed, scope...)`, so results never depend on how trials are spread
//! over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with an ordered list of scope indices.
pub fn derive_seed(base: u64, scope: &[u64]) -> u64 {
    scope
        .iter()
        .fold(splitmix64(base), |acc, &s| splitmix64(acc ^ splitmix64(s)))
}

/// A fresh stream for the given scope.
pub fn stream(base: u64, scope: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, scope))
}
