//! Seeded, stream-addressable randomness.
//!
//! Every randomized operation in this crate draws from a ChaCha12 generator
//! keyed by a 64-bit seed and a 64-bit stream id. The pair `(seed, stream_id)`
//! fully determines the draw sequence, independent of platform, thread count
//! or scheduling, so distinct stream ids can be consumed concurrently while
//! keeping results reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Address of one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derive the child stream for element `index` of a batch.
    ///
    /// Children of one parent are pairwise distinct and never equal the
    /// parent itself; the derivation is a fixed bijective mix so batch
    /// element `i` sees the same draws whether the batch runs sequentially
    /// or in parallel.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(1))),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_stream_same_draws() {
        let s = RngStream::new(7, 3);
        let a: Vec<u64> = s.rng().random_iter().take(16).collect();
        let b: Vec<u64> = s.rng().random_iter().take(16).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_diverge() {
        let a: u64 = RngStream::new(7, 0).rng().random();
        let b: u64 = RngStream::new(7, 1).rng().random();
        assert_ne!(a, b);
    }

    #[test]
    fn substreams_are_distinct() {
        let parent = RngStream::new(42, 9);
        let ids: Vec<u64> = (0..1000).map(|i| parent.substream(i).stream_id).collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), ids.len());
        assert!(!ids.contains(&parent.stream_id));
    }
}
