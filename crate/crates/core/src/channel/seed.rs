//! Seed derivation for independent random streams.
//!
//! A child seed is the first 8 bytes (little-endian) of
//! `SHA-256(master_seed.to_le_bytes() || tag || 0x00 || index.to_le_bytes())`,
//! where `index` is encoded as a `u64`. The hash is stable across platforms and
//! releases, so realization `i` draws the same numbers no matter which thread
//! or in which order it is generated.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Named random streams. Each consumer of randomness gets its own tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Topology,
    Channel,
    KMeans,
}

impl StreamTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamTag::Topology => "topology",
            StreamTag::Channel => "channel",
            StreamTag::KMeans => "kmeans",
        }
    }
}

pub fn derive_seed(master_seed: u64, tag: StreamTag, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(tag.as_str().as_bytes());
    hasher.update([0u8]);
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

pub fn stream_rng(master_seed: u64, tag: StreamTag, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(derive_seed(master_seed, tag, index))
}
