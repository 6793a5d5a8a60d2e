//! Deterministic seed derivation.
//!
//! All randomness in an experiment flows from a single master seed. Each
//! component derives its own stream by hashing the master seed together with
//! a component name and an index, so replicates are reproducible regardless
//! of scheduling order (parallel and serial runs produce identical results).

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;
use sha2::{Digest, Sha256};

/// RNG used throughout the crate. ChaCha is portable across platforms, so
/// seeded runs are bit-reproducible.
pub type Rng = ChaCha12Rng;

/// Derive a stream for `component` from the master seed.
pub fn derive(master_seed: u64, component: &str) -> Rng {
    derive_indexed(master_seed, component, 0)
}

/// Derive the `index`-th stream for `component` from the master seed.
pub fn derive_indexed(master_seed: u64, component: &str, index: u64) -> Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update([0u8]);
    hasher.update(component.as_bytes());
    hasher.update([0u8]);
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    Rng::from_seed(seed)
}
