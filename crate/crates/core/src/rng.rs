//! Seed plumbing.
//!
//! Every random quantity in the crate is drawn from a `ChaCha8Rng` whose
//! 64-bit seed is derived from a root seed and a purpose-specific salt via
//! splitmix64. Derived streams are statistically independent, so datasets
//! never need to be serialized: sample `i` of a dataset is always
//! regenerated from `(root_seed, i)` on demand, in any order, on any number
//! of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; decorrelates consecutive salts.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent seed from `(seed, salt)`.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(seed ^ splitmix64(salt))
}

/// A generator for the stream identified by `(seed, salt)`.
pub fn stream(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, salt))
}
