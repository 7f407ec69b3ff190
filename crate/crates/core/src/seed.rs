//! Deterministic per-purpose random streams.
//!
//! Every random decision draws from a ChaCha8 stream whose seed is the
//! SHA-256 of the master seed, a table id, a purpose tag and an index, so
//! results do not depend on iteration order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(master: u64, table_id: &str, purpose: &str, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((table_id.len() as u64).to_le_bytes());
    h.update(table_id.as_bytes());
    h.update((purpose.len() as u64).to_le_bytes());
    h.update(purpose.as_bytes());
    h.update(index.to_le_bytes());
    h.finalize().into()
}

pub fn rng_for(master: u64, table_id: &str, purpose: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_seed(master, table_id, purpose, index))
}

/// Short hex tag recorded with generated items.
pub fn seed_trace(master: u64, table_id: &str, purpose: &str, index: u64) -> String {
    hex::encode(&derive_seed(master, table_id, purpose, index)[..8])
}
