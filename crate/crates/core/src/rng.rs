//! Reproducible random streams.
//!
//! Every stream in a run is a ChaCha8 generator seeded from
//! `(master seed, purpose label, replication id)` through SHA-256, so child
//! streams never depend on scheduling or on how many draws a sibling made.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

pub fn derive_seed(master_seed: u64, purpose: &str, replication_id: u64) -> u64 {
    let digest = Sha256::new()
        .chain_update(master_seed.to_le_bytes())
        .chain_update((purpose.len() as u64).to_le_bytes())
        .chain_update(purpose.as_bytes())
        .chain_update(replication_id.to_le_bytes())
        .finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

pub fn stream(master_seed: u64, purpose: &str, replication_id: u64) -> Stream {
    Stream::seed_from_u64(derive_seed(master_seed, purpose, replication_id))
}
