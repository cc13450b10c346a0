//! Reproducible random streams.
//!
//! A stream is identified by a `(base_seed, stream_index)` pair. Both halves are
//! passed through a splitmix64 finalizer before seeding ChaCha8, so adjacent
//! seeds and adjacent stream indices land on unrelated generator states.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// One round of the splitmix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub base_seed: u64,
    pub stream_index: u64,
}

impl RngSpec {
    pub fn new(base_seed: u64, stream_index: u64) -> Self {
        Self {
            base_seed,
            stream_index,
        }
    }

    /// Stream 0 of `base_seed`.
    pub fn from_seed(base_seed: u64) -> Self {
        Self::new(base_seed, 0)
    }

    /// A child stream keyed by `tag`. Deriving the same tags in the same order
    /// always yields the same child.
    pub fn derive(&self, tag: u64) -> Self {
        Self {
            base_seed: self.base_seed,
            stream_index: splitmix64(self.stream_index ^ splitmix64(tag)),
        }
    }

    /// Derives through a sequence of tags.
    pub fn derive_all(&self, tags: &[u64]) -> Self {
        tags.iter().fold(*self, |spec, &t| spec.derive(t))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let seed = splitmix64(self.base_seed ^ splitmix64(self.stream_index.wrapping_add(GOLDEN_GAMMA)));
        ChaCha8Rng::seed_from_u64(seed)
    }
}
