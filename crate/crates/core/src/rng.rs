//! Deterministic random-stream derivation.
//!
//! Every random quantity is drawn from a ChaCha stream keyed by the master
//! seed plus a path of integer tags (setup index, trial index, purpose).
//! Distinct paths give independent streams, and a stream depends only on its
//! path, never on scheduling. That makes parallel runs bit-identical across
//! thread counts.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags separating the random streams within one Monte Carlo trial
/// and across the stages of a sweep.
pub mod purpose {
    /// Channel realization (phases and NLoS components).
    pub const CHANNEL: u64 = 1;
    /// Additive pilot noise per (AP, pilot).
    pub const PILOT_NOISE: u64 = 2;
    /// Network-instance generation for one setup of a sweep.
    pub const SETUP: u64 = 3;
    /// Master seeds handed to Monte Carlo validation runs.
    pub const MONTE_CARLO: u64 = 4;
}

/// SplitMix64 finalizer; a full-period bijection with strong avalanche.
#[inline]
fn mix(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives the ChaCha stream for `path` under `master`.
///
/// The absorption is order-sensitive, so `[a, b]` and `[b, a]` yield
/// unrelated streams, as do paths of different lengths.
pub fn substream(master: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = mix(master ^ 0x6a09_e667_f3bc_c908);
    for &tag in path {
        state = mix(state ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x1f83_d9ab_fb41_bd6b);
    }
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
        state = mix(state.wrapping_add((i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
