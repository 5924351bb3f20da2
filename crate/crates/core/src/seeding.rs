//! Deterministic derivation of RNG streams.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by
//! (master seed, purpose tag, context words). Streams for noise and row
//! selection depend only on the master seed, the trial index and the data
//! size — never on method or basis — which is what pairs trials across
//! the CS/LS × PB/PEB combinations of a sweep.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for the derived streams.
pub mod purpose {
    pub const NOISE: u64 = 0x4e4f4953;
    pub const ROWS: u64 = 0x524f5753;
    pub const RIP: u64 = 0x52495031;
    pub const GENERIC: u64 = 0x47454e52;
}

/// SplitMix64 step; folds a context word into a seed.
pub fn mix(seed: u64, word: u64) -> u64 {
    let mut z = seed ^ word.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// ChaCha stream keyed by the four words.
pub fn stream(master_seed: u64, purpose: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&purpose.to_le_bytes());
    seed[16..24].copy_from_slice(&a.to_le_bytes());
    seed[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}
