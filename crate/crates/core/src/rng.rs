//! Seed plumbing shared by every stochastic component.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; a cheap, well-mixed 64-bit hash.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of a `(seed, index)` pair, independent of any iteration order.
pub fn hash_pair(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// A ChaCha8 stream derived from `seed` and a named purpose, so that
/// independent consumers of one user seed never share a stream.
pub fn stream(seed: u64, purpose: &str) -> ChaCha8Rng {
    let mut h = mix64(seed);
    for b in purpose.bytes() {
        h = mix64(h ^ u64::from(b));
    }
    ChaCha8Rng::seed_from_u64(h)
}
