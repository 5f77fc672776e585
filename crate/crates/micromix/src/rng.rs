//! Reproducible random streams.
//!
//! Every stochastic component draws from a ChaCha12 counter-based
//! generator, so output is identical across platforms and thread
//! counts. Independent streams (ensemble runs, sweep cells) are derived
//! with the SplitMix64 finalizer: `seed_k = mix(base_seed + mix(k))`.
//! Stream derivation is stateless, which makes aggregation independent
//! of completion order.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The simulation RNG. One instance per trajectory.
pub type SimRng = ChaCha12Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for stream `stream` of `base_seed`.
pub fn derive_seed(base_seed: u64, stream: u64) -> u64 {
    mix(base_seed.wrapping_add(mix(stream)))
}

/// RNG for stream `stream` of `base_seed`.
pub fn stream_rng(base_seed: u64, stream: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(base_seed, stream))
}

/// RNG seeded directly (stream 0 semantics: the trajectory's own seed).
pub fn trajectory_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
