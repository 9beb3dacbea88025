//! Counter-based random streams.
//!
//! Every matrix entry `(j, k)` of a draw gets its own ChaCha8 stream keyed
//! by the draw seed, so the value of an entry depends only on
//! `(seed, j, k)` and never on the order in which entries are generated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a child seed from a parent seed and a sequence of labels.
pub fn derive_seed(parent: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix64(parent), |acc, &l| mix64(acc ^ mix64(l)))
}

/// Independent stream for entry `(j, k)` (0-based, `j <= k`) of the draw `seed`.
pub fn entry_stream(seed: u64, j: usize, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((j as u64) << 32) | k as u64);
    rng
}

/// Stream for auxiliary sampling (bootstrap, Monte Carlo moments) labelled by `tag`.
pub fn aux_stream(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[tag]));
    rng.set_stream(u64::MAX);
    rng
}
