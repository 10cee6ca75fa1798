//! Seeded random streams.
//!
//! A run owns one [`Streams`] value. Each consumer asks for a generator keyed by
//! a purpose tag and an index (epoch, fold, chain), so the draws made by one
//! stage never shift the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Streams {
    pub seed: u64,
}

/// Purpose tags for [`Streams::stream`].
pub mod tag {
    pub const INIT: u64 = 1;
    pub const SAMPLE: u64 = 2;
    pub const CV: u64 = 3;
    pub const REFERENCE: u64 = 4;
    pub const MONTE_CARLO: u64 = 5;
    pub const QOI: u64 = 6;
    pub const METHOD: u64 = 7;
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn stream(&self, tag: u64, index: u64) -> Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index);
        rng
    }

    /// Derive an independent child seed, e.g. one per compared method.
    pub fn child(&self, index: u64) -> Streams {
        let mut z = self.seed ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Streams::new(z ^ (z >> 31))
    }
}
