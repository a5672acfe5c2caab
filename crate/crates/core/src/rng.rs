use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seed record: a master seed plus a stream id (replicate index).
///
/// Distinct stream ids give statistically independent streams; the pair fully
/// determines all randomness drawn through it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub master: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(master: u64, stream: u64) -> Self {
        RngSeed { master, stream }
    }

    /// Replicate `k` of the same master seed.
    pub fn with_stream(self, stream: u64) -> Self {
        RngSeed { master: self.master, stream }
    }

    /// A generator for this (master, stream) pair.
    pub fn rng(&self) -> ChaCha8Rng {
        self.keyed_rng(&[])
    }

    /// A generator for a tagged substream, e.g. one per scale slice or per
    /// walk. Tags are mixed into the key; distinct tag tuples give
    /// independent streams.
    pub fn keyed_rng(&self, tags: &[u64]) -> ChaCha8Rng {
        let mut state = splitmix(self.master ^ 0x9e37_79b9_7f4a_7c15);
        state = splitmix(state ^ self.stream);
        let mut key = [0u8; 32];
        let mut acc = state;
        for t in tags {
            acc = splitmix(acc ^ *t);
        }
        for chunk in key.chunks_mut(8) {
            acc = splitmix(acc);
            chunk.copy_from_slice(&acc.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
