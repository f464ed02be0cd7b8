//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed with an
//! independent stream index, so Monte Carlo batches can run on separate
//! streams and still be reproduced one by one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type GgeRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamId {
    pub seed: u64,
    pub stream: u64,
}

impl StreamId {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> GgeRng {
        stream_rng(self.seed, self.stream)
    }

    /// A child stream, used to fan out work deterministically.
    pub fn child(&self, index: u64) -> StreamId {
        StreamId {
            seed: self.seed,
            stream: self.stream.wrapping_mul(0x9E37_79B9).wrapping_add(index + 1),
        }
    }
}

pub fn stream_rng(seed: u64, stream: u64) -> GgeRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
