//! Seed derivation for reproducible, order-independent Monte Carlo trials.
//!
//! Every random stream is a `ChaCha8Rng` keyed by a 64-bit seed mixed from
//! `(master_seed, stream_tag, indices...)`. Two streams with different tags
//! or indices never share state, so trials can run in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named random streams used by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Noise realizations for benchmark trials.
    Trial = 1,
    /// Noise-only runs used to calibrate detection thresholds.
    Calibration = 2,
    /// Fresh noise-only runs used to validate the false-alarm rate.
    Validation = 3,
    /// Anything else (CLI, ad-hoc experiments).
    Adhoc = 4,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a master seed, a stream tag and any number of indices into one seed.
pub fn derive_seed(master_seed: u64, stream: Stream, indices: &[u64]) -> u64 {
    let mut h = splitmix64(master_seed ^ 0x6A09_E667_F3BC_C909);
    h = splitmix64(h ^ stream as u64);
    for &i in indices {
        h = splitmix64(h ^ i);
    }
    h
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
