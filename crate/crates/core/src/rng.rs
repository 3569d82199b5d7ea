//! Seed derivation and counter-mode random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream that is
//! addressed by `(seed, stream)`. Two processes that agree on the pair read
//! the same bits, which is what lets a codebook entry be regenerated on demand
//! instead of being stored.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a parent seed, a purpose tag and an index.
pub fn derive_seed(parent: u64, tag: u64, index: u64) -> u64 {
    mix64(mix64(parent ^ mix64(tag)).wrapping_add(index))
}

/// Random stream number `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) mod tags {
    pub const INPUT: u64 = 0x0069_6e70_7574;
    pub const TABLE: u64 = 0x0074_6162_6c65;
    pub const TRIAL: u64 = 0x0074_7269_616c;
    pub const SPEC: u64 = 0x7370_6563;
}
