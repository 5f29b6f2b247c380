//! Counter-based seed derivation.
//!
//! Every random stream in an experiment is keyed by the master seed plus a
//! path of integers (purpose tag, trial index, array index, ...). Streams are
//! therefore independent of evaluation order and thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream tags used across the crate.
pub mod tag {
    pub const DATA: u64 = 1;
    pub const ARRAY: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const INFO: u64 = 4;
    pub const FILLER: u64 = 5;
    pub const PMF: u64 = 6;
    pub const TRIAL: u64 = 7;
    pub const GRAPH: u64 = 8;
    pub const INTERLEAVER: u64 = 9;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a path of counters.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k.wrapping_add(0x632B_E59B_D9B4_E019))))
}

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn rng_at(seed: u64, path: &[u64]) -> SimRng {
    rng(derive(seed, path))
}
