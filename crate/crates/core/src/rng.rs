//! Seeded randomness with a per-replicate stream contract.
//!
//! A replicate's generator is ChaCha8 keyed by the seed and positioned on
//! its own stream, so its output never depends on which worker ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type SimRng = ChaCha8Rng;

/// A `(seed, stream)` pair naming one reproducible random sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Seed for an independent sub-experiment tagged `label`. Its replicate
    /// streams never collide with this seed's.
    pub fn child(&self, label: u64) -> RngSeed {
        let mixed = splitmix64(splitmix64(self.seed ^ splitmix64(self.stream)) ^ label);
        RngSeed::new(mixed)
    }

    /// Seed of replicate `i` in a batch rooted here.
    pub fn replicate(&self, i: u64) -> RngSeed {
        RngSeed { seed: self.child(REPLICATE_LABEL).seed, stream: i }
    }
}

const REPLICATE_LABEL: u64 = 0x7265_706c_6963_6174;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform in `[0, 1)` with 53 random bits.
#[inline]
pub(crate) fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
