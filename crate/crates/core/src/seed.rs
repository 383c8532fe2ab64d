//! Seed derivation.
//!
//! Every random stream in the crate is keyed by `(root seed, component name,
//! index)`. The derived seed is the first eight bytes (little endian) of
//! `SHA-256(root_le || len(component)_le || component || index_le)`, so two
//! components never share a stream and results do not depend on the order in
//! which streams are created or on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives a child seed for `component` / `index` from `root`.
pub fn derive_seed(root: u64, component: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update((component.len() as u64).to_le_bytes());
    hasher.update(component.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Deterministic generator for a derived stream.
pub fn stream(root: u64, component: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, component, index))
}
