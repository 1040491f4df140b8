//! Deterministic seed derivation.
//!
//! Every random stream in a run is keyed by a path of integers (master seed,
//! restart, iteration, draw, ...) so results never depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a key path into a single 64-bit seed.
pub fn derive(path: &[u64]) -> u64 {
    path.iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &x| splitmix(acc ^ splitmix(x)))
}

pub fn rng(path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(path))
}
