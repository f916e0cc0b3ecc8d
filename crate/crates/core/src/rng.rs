//! Seed derivation for reproducible, isolated random streams.
//!
//! Every stochastic component draws from a `ChaCha8Rng` whose seed is derived
//! from the experiment master seed, a purpose tag, and the component's own
//! coordinates (silo, round, epoch, ...). Streams for different coordinates
//! never overlap, and reruns with the same master seed are bit-identical.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a child seed from `master`, a purpose tag, and extra coordinates.
pub fn derive_seed(master: u64, tag: &str, parts: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(tag.as_bytes());
    for part in parts {
        hasher.update([0x1f]);
        hasher.update(part.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 yields 32 bytes"))
}

/// Deterministic RNG for a derived seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shorthand for `seeded(derive_seed(..))`.
pub fn stream(master: u64, tag: &str, parts: &[u64]) -> ChaCha8Rng {
    seeded(derive_seed(master, tag, parts))
}
