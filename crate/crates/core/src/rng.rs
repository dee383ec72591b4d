//! Seeded random streams.
//!
//! Every random draw in the crate goes through [`stream`], so outputs are a
//! pure function of the user seed and the stream label.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent sub-seed for `label` from `seed`.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    mix(mix(seed) ^ mix(label.wrapping_add(0xA076_1D64_78BD_642F)))
}

pub fn stream(seed: u64, label: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, label))
}

/// Stream labels used across the crate.
pub(crate) mod labels {
    pub const UNIT_SAMPLE: u64 = 1;
    pub const INIT: u64 = 2;
    pub const RESTART: u64 = 3;
    pub const CLUSTER: u64 = 4;
    pub const CONTAMINATE: u64 = 5;
}
