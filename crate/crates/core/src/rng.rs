//! Deterministic keyed randomness.
//!
//! Every random decision in a run is derived from the scenario seed plus a
//! purpose tag and the relevant (round, node) coordinates, so draws are
//! independent of evaluation order and identical across re-runs.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tag for oracle-mode random trust assessments.
pub const STREAM_TRUST: u64 = 0x74727573;
/// Stream tag for infrequent-mode check scheduling.
pub const STREAM_CHECK: u64 = 0x6368656b;
/// Stream tag for per-adversary randomness.
pub const STREAM_ADVERSARY: u64 = 0x61647673;

/// SplitMix64 finalizer; good avalanche, stable across platforms.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Collapse a key path (seed, stream, round, node, ...) into one 64-bit key.
pub fn mix(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x9fb2_1c65_1e98_df25, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// A ChaCha stream keyed by an explicit key path.
pub fn keyed_rng(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(parts))
}

/// Map a 64-bit key to a uniform f64 in [0, 1).
pub fn unit_f64(parts: &[u64]) -> f64 {
    (mix(parts) >> 11) as f64 / (1u64 << 53) as f64
}
