//! Seed derivation for reproducible, independently runnable trials.
//!
//! Every trial owns a `ChaCha8Rng` seeded from
//! `derive_seed(base_seed, cell_index, trial_index)`:
//!
//! ```text
//! mix64(x) = splitmix64 finalizer:
//!     x ^= x >> 30; x *= 0xBF58476D1CE4E5B9;
//!     x ^= x >> 27; x *= 0x94D049BB133111EB;
//!     x ^= x >> 31
//! derive_seed(b, c, t) = mix64(mix64(mix64(b) ^ (c + G)) ^ (t + 2G))
//!     where G = 0x9E3779B97F4A7C15 and all arithmetic wraps mod 2^64
//! ```
//!
//! Ports in other languages can reproduce the seeds exactly; the ChaCha8
//! stream itself is `rand_chacha`'s `seed_from_u64`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(base_seed: u64, cell_index: u64, trial_index: u64) -> u64 {
    let cell = mix64(mix64(base_seed) ^ cell_index.wrapping_add(GOLDEN));
    mix64(cell ^ trial_index.wrapping_add(GOLDEN.wrapping_mul(2)))
}

pub fn trial_rng(base_seed: u64, cell_index: u64, trial_index: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(derive_seed(base_seed, cell_index, trial_index))
}
