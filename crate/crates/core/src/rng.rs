//! Deterministic generator streams.
//!
//! Every random draw in the crate comes from a ChaCha stream whose seed is
//! derived from a base seed and a path of indices (trial, step, probe, ...).
//! Two evaluations with the same path see the same numbers regardless of
//! evaluation order or thread.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of indices into a new seed.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019))))
}

/// Generator for the stream identified by `(base, path)`.
pub fn stream(base: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, path))
}

/// Draws a fresh base seed from a caller-owned generator.
pub fn fork_seed<R: RngCore + ?Sized>(rng: &mut R) -> u64 {
    rng.next_u64()
}

/// Domain tags keep streams used for different purposes apart.
pub mod tag {
    pub const SCENE: u64 = 1;
    pub const OBSERVATION: u64 = 2;
    pub const TRIGGER: u64 = 3;
    pub const OPERATOR: u64 = 4;
    pub const LATENCY: u64 = 5;
    pub const TRACE: u64 = 6;
    pub const TRIAL: u64 = 7;
    pub const OVERLAY: u64 = 8;
}
