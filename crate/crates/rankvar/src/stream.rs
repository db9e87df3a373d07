//! Deterministic random-number substreams.
//!
//! Every randomized routine in this crate draws from a ChaCha8 stream derived
//! from the user's seed plus a short path of indices (replicate number,
//! bootstrap replicate, item index). Results then depend only on
//! (seed, path), never on how work is scheduled across threads, which is what
//! makes every command reproducible at any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. Spreads a 64-bit value over all output bits.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent ChaCha8 stream from `seed` and a path of indices.
///
/// Paths of different lengths or contents yield unrelated streams, so one
/// seed can fan out into per-replicate and per-item generators without any
/// coordination between workers.
pub fn substream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = mix(seed ^ GAMMA);
    for &word in path {
        state = mix(state ^ mix(word.wrapping_add(GAMMA)));
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(GAMMA);
        chunk.copy_from_slice(&mix(state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
