//! Keyed random streams.
//!
//! Every stochastic component draws from its own ChaCha stream derived from
//! `(master seed, owner, purpose)`. Adding a user to an experiment never
//! perturbs the streams of users that were already there.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Derives an independent stream for `owner`/`purpose` under `seed`.
pub fn stream(seed: u64, owner: &str, purpose: &str) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((owner.len() as u64).to_le_bytes());
    hasher.update(owner.as_bytes());
    hasher.update((purpose.len() as u64).to_le_bytes());
    hasher.update(purpose.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}
