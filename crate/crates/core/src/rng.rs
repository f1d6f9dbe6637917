//! Seeded random streams.
//!
//! Every sampler takes a 64-bit seed; independent sub-streams of the same seed are
//! ChaCha stream ids, and ensembles derive per-member seeds with [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids used across the crate so that, e.g., jitter never perturbs the
/// coordinates drawn from the main stream.
pub mod streams {
    pub const MAIN: u64 = 0;
    pub const JITTER: u64 = 1;
    pub const MARKS: u64 = 2;
    pub const CLOCK: u64 = 3;
    pub const AUX: u64 = 4;
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for member `index` of an ensemble rooted at `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix(mix(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}
