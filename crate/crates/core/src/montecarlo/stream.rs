//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, replication, coordinate)`: the seed
//! keys a ChaCha8 generator, the replication index selects its 64-bit
//! stream, and the coordinate index is the 32-bit word position inside that
//! stream. Coordinate `i` of replication `r` therefore always receives the
//! same word, whichever worker computes it and in whatever order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Keyed generator from which per-replication streams are cut.
#[derive(Clone, Debug)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream positioned at `coordinate` of `replication`. Successive draws
    /// continue with coordinates `coordinate + 1, coordinate + 2, …`.
    pub fn stream(&self, replication: u64, coordinate: u64) -> TrialStream {
        let mut rng = self.base.clone();
        rng.set_stream(replication);
        rng.set_word_pos(u128::from(coordinate));
        TrialStream { rng }
    }
}

/// One 32-bit word per coordinate.
#[derive(Clone, Debug)]
pub struct TrialStream {
    rng: ChaCha8Rng,
}

impl TrialStream {
    #[inline]
    pub fn next_word(&mut self) -> u32 {
        self.rng.next_u32()
    }

    /// Uniform on `[0, 1)` with 32-bit resolution; consumes one coordinate.
    pub fn next_unit(&mut self) -> f64 {
        f64::from(self.next_word()) * (1.0 / 4_294_967_296.0)
    }

    pub fn word_position(&self) -> u128 {
        self.rng.get_word_pos()
    }
}

/// The stream for `(seed, replication_index, coordinate_index)`.
pub fn derive_stream(seed: u64, replication_index: u64, coordinate_index: u64) -> TrialStream {
    StreamFactory::new(seed).stream(replication_index, coordinate_index)
}
