//! Counter-based seed derivation.
//!
//! Every random stream in an experiment is keyed by a tuple of integers
//! (master seed, agent key, trial, ...) passed through SplitMix64 mixing,
//! so a stream never depends on how many other streams exist or on the
//! order in which they are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const SALT: u64 = 0x243F_6A88_85A3_08D3;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `master`, one mixing round per part. Each part is
/// salted by its position, so permutations and repeated values give
/// distinct seeds.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .enumerate()
        .fold(mix64(master ^ SALT), |acc, (i, &p)| {
            let salted = mix64(p.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN)));
            mix64(acc.wrapping_add(GOLDEN).wrapping_add(salted))
        })
}

/// Deterministic generator for a derived seed.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
