//! Counter-based random substreams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by the
//! master seed and an experiment id, with the replication index selecting the
//! ChaCha stream. Replication `i` therefore sees the same numbers whether it
//! runs first, last, or on another worker.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Identifies one family of replications (one estimator, one quantity, one n).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    seed: u64,
    experiment: u64,
}

impl StreamKey {
    pub fn new(seed: u64, experiment: u64) -> Self {
        Self { seed, experiment }
    }

    /// Key derived from a textual label, e.g. `"gamma/st-fixed/comparison"`, and `n`.
    pub fn labeled(seed: u64, label: &str, n: u64) -> Self {
        let mut h = fnv1a(label.as_bytes());
        h = fnv1a_extend(h, &n.to_le_bytes());
        Self::new(seed, h)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn experiment(&self) -> u64 {
        self.experiment
    }

    /// A key for a nested family, e.g. the inner-CV draws of replication `rep`.
    pub fn child(&self, tag: u64) -> Self {
        let mut h = fnv1a_extend(FNV_OFFSET, &self.experiment.to_le_bytes());
        h = fnv1a_extend(h, &tag.to_le_bytes());
        Self::new(self.seed, h)
    }

    pub fn stream(&self, replication: u64) -> Stream {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.experiment.to_le_bytes());
        key[16..24].copy_from_slice(b"relstab\0");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(replication);
        rng
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    fnv1a_extend(FNV_OFFSET, bytes)
}

fn fnv1a_extend(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}
