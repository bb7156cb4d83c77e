//! Seeded random streams addressed by a key path.
//!
//! Every stochastic routine takes its generator as an argument. Parallel
//! work derives one independent stream per unit of work from
//! `(seed, index, ...)`, so results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator type used throughout the crate.
pub type StreamRng = ChaCha20Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for the key `(seed, path[0], path[1], ...)`.
///
/// Distinct keys give statistically independent streams; equal keys give
/// identical streams.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let mut state = seed;
    let mut acc = splitmix64(&mut state);
    for (depth, &p) in path.iter().enumerate() {
        state = acc ^ p.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(depth as u64 + 1);
        acc = splitmix64(&mut state);
    }
    let mut bytes = [0u8; 32];
    let mut st = acc;
    for chunk in bytes.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut st).to_le_bytes());
    }
    ChaCha20Rng::from_seed(bytes)
}
