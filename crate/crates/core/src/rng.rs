//! Seeded, splittable random streams.
//!
//! Every stochastic routine takes a `u64` seed. Independent sub-tasks
//! (calibration replications, experiment runs) derive their own stream from
//! `(seed, stream)` so they can execute in any order, or in parallel, and
//! still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for the root stream of `seed`.
pub fn from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for sub-stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed from a parent seed and a label, for nested streams.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
