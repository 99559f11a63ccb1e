//! Seeded random streams.
//!
//! Every random draw comes from ChaCha20 keyed by the user seed
//! (`seed_from_u64`) with the 64-bit stream selector `4 * index + purpose`.
//! Streams are counter based, so realization `i` draws the same numbers no
//! matter which thread runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.9), key = seed_from_u64(seed), stream = 4*realization + purpose";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Disorder = 0,
    InitialState = 1,
    Auxiliary = 2,
}

pub fn stream(seed: u64, realization: u64, purpose: Purpose) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(realization, purpose));
    rng
}

pub fn stream_id(realization: u64, purpose: Purpose) -> u64 {
    realization
        .wrapping_mul(4)
        .wrapping_add(purpose as u64)
}
