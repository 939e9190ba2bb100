//! Seed derivation.
//!
//! A single master seed is expanded into independent per-purpose seeds with
//! the SplitMix64 finalizer:
//!
//! ```text
//! derive(master, purpose, index) = splitmix64(master ^ splitmix64(purpose_id * 2^32 + index))
//! ```
//!
//! so the labeled split, patch sampling, per-class K-means and SVM shuffles
//! can each be reproduced without replaying the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived seed is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Split = 1,
    PatchSample = 2,
    Kmeans = 3,
    Svm = 4,
    Member = 5,
}

/// One SplitMix64 output step for state `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(master: u64, purpose: Purpose, index: u64) -> u64 {
    let tag = ((purpose as u64) << 32).wrapping_add(index);
    splitmix64(master ^ splitmix64(tag))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
