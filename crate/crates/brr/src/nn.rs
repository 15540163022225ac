//! Exact nearest-neighbor retrieval over packed Hamming codes and real
//! Euclidean vectors.
//!
//! Both index types always return the true argmin; ties break toward the
//! smallest word id. The Hamming index can carry a multi-index accelerator
//! that buckets codes by contiguous substrings and probes buckets in
//! increasing substring radius. By the pigeonhole bound, a code at distance
//! `r` from the query matches some substring within radius `floor(r / m)`,
//! so the search can stop as soon as the best distance found is below
//! `m * (s + 1)` after exhausting radius `s`. When the probe budget runs out
//! (far queries make radius enumeration explode combinatorially) the index
//! falls back to a full linear scan, so exactness never depends on the
//! accelerator.

use std::collections::HashMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::embeddings::{hamming_words, BinaryCodeMatrix, CodeRef, RealEmbeddingMatrix};
use crate::error::{Error, Result};

/// Search strategy for [`HammingIndex`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acceleration {
    /// Plain popcount scan over every code.
    LinearScan,
    /// Substring bucketing with progressive-radius probing.
    MultiIndex {
        /// Number of contiguous substrings per code. Clamped so each
        /// substring is 1..=64 bits wide.
        substrings: usize,
    },
}

impl Default for Acceleration {
    fn default() -> Self {
        // tuned for 256-bit codes; see module docs for the fallback story
        Acceleration::MultiIndex { substrings: 4 }
    }
}

/// One bucketed substring range of the multi-index.
#[derive(Debug, Clone)]
struct Block {
    start: usize,
    width: usize,
    buckets: HashMap<u64, Vec<u32>>,
}

#[derive(Debug, Clone)]
enum AccelState {
    Linear,
    Multi(Vec<Block>),
}

/// Immutable exact Hamming nearest-neighbor index.
#[derive(Debug, Clone)]
pub struct HammingIndex {
    codes: BinaryCodeMatrix,
    accel: AccelState,
}

impl HammingIndex {
    /// Build over the given codes; word id `i` is row `i`.
    pub fn build(codes: BinaryCodeMatrix, acceleration: Acceleration) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let accel = match acceleration {
            Acceleration::LinearScan => AccelState::Linear,
            Acceleration::MultiIndex { substrings } => {
                AccelState::Multi(build_blocks(&codes, substrings))
            }
        };
        Ok(Self { codes, accel })
    }

    pub fn bits(&self) -> usize {
        self.codes.bits()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // build rejects empty code sets
    }

    pub fn codes(&self) -> &BinaryCodeMatrix {
        &self.codes
    }

    /// Exact nearest code: `(word id, Hamming distance)`, smallest id on ties.
    pub fn nearest(&self, query: CodeRef<'_>) -> Result<(u32, u32)> {
        if query.bits() != self.codes.bits() {
            return Err(Error::BitWidthMismatch {
                left: query.bits(),
                right: self.codes.bits(),
            });
        }
        Ok(match &self.accel {
            AccelState::Linear => self.scan(query),
            AccelState::Multi(blocks) => {
                let budget = (2 * self.len()).max(1024);
                match self.multi_search(blocks, query, budget, None) {
                    Some(hit) => hit,
                    None => self.scan(query), // budget exhausted
                }
            }
        })
    }

    /// One `nearest` per query row; parallel when the `parallel` feature is
    /// on. Queries are independent, so the output never depends on the
    /// execution order.
    pub fn nearest_batch(&self, queries: &BinaryCodeMatrix) -> Result<Vec<(u32, u32)>> {
        #[cfg(feature = "parallel")]
        {
            if queries.bits() != self.codes.bits() {
                return Err(Error::BitWidthMismatch {
                    left: queries.bits(),
                    right: self.codes.bits(),
                });
            }
            (0..queries.len())
                .into_par_iter()
                .map(|i| self.nearest(queries.code(i)))
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.nearest_batch_seq(queries)
        }
    }

    /// Sequential twin of [`nearest_batch`](Self::nearest_batch).
    pub fn nearest_batch_seq(&self, queries: &BinaryCodeMatrix) -> Result<Vec<(u32, u32)>> {
        queries.iter().map(|q| self.nearest(q)).collect()
    }

    fn scan(&self, query: CodeRef<'_>) -> (u32, u32) {
        let q = query.words();
        let mut best = (0u32, u32::MAX);
        for i in 0..self.codes.len() {
            let d = hamming_words(q, self.codes.code_words(i));
            if d < best.1 {
                best = (i as u32, d);
            }
        }
        (best.0, best.1)
    }

    /// Progressive-radius probe. Returns `None` once more than `budget` keys
    /// have been enumerated; `candidates`, when given, records every bucket
    /// member seen (instrumentation for the completeness property).
    fn multi_search(
        &self,
        blocks: &[Block],
        query: CodeRef<'_>,
        budget: usize,
        mut candidates: Option<&mut Vec<u32>>,
    ) -> Option<(u32, u32)> {
        let m = blocks.len() as u32;
        let q = query.words();
        let mut best: Option<(u32, u32)> = None; // (id, dist)
        let mut probes = 0usize;
        for s in 0.. {
            for block in blocks {
                if s > block.width {
                    continue;
                }
                let g = query.chunk(block.start, block.width);
                let mut exhausted = false;
                for_each_at_distance(g, block.width, s, &mut |key| {
                    probes += 1;
                    if probes > budget {
                        exhausted = true;
                        return false;
                    }
                    if let Some(ids) = block.buckets.get(&key) {
                        for &id in ids {
                            if let Some(c) = candidates.as_deref_mut() {
                                c.push(id);
                            }
                            let d = hamming_words(q, self.codes.code_words(id as usize));
                            let better = match best {
                                None => true,
                                Some((bi, bd)) => d < bd || (d == bd && id < bi),
                            };
                            if better {
                                best = Some((id, d));
                            }
                        }
                    }
                    true
                });
                if exhausted {
                    return None;
                }
            }
            // everything not yet seen sits at substring radius >= s + 1 in
            // every block, hence at full distance >= m * (s + 1)
            if let Some((_, bd)) = best {
                if bd < m * (s as u32 + 1) {
                    break;
                }
            }
            if s >= blocks.iter().map(|b| b.width).max().unwrap_or(0) {
                break; // all keys of every block enumerated
            }
        }
        best
    }

    /// All bucket members probed before the stopping rule fires, without a
    /// budget. Test hook for the pigeonhole-completeness property.
    #[cfg(test)]
    fn multi_candidates(&self, query: CodeRef<'_>) -> Option<Vec<u32>> {
        match &self.accel {
            AccelState::Linear => None,
            AccelState::Multi(blocks) => {
                let mut seen = Vec::new();
                self.multi_search(blocks, query, usize::MAX, Some(&mut seen));
                Some(seen)
            }
        }
    }
}

fn build_blocks(codes: &BinaryCodeMatrix, substrings: usize) -> Vec<Block> {
    let bits = codes.bits();
    // every substring must fit a u64 key and hold at least one bit
    let m = substrings.clamp(bits.div_ceil(64), bits);
    let base = bits / m;
    let rem = bits % m;
    let mut blocks = Vec::with_capacity(m);
    let mut start = 0;
    for j in 0..m {
        let width = base + usize::from(j < rem);
        let mut buckets: HashMap<u64, Vec<u32>> = HashMap::new();
        for i in 0..codes.len() {
            let key = codes.code(i).chunk(start, width);
            buckets.entry(key).or_default().push(i as u32);
        }
        blocks.push(Block {
            start,
            width,
            buckets,
        });
        start += width;
    }
    debug_assert_eq!(start, bits);
    blocks
}

/// Invoke `f` on every `width`-bit key at Hamming distance exactly `s` from
/// `g`, stopping early if `f` returns `false`.
fn for_each_at_distance(g: u64, width: usize, s: usize, f: &mut impl FnMut(u64) -> bool) -> bool {
    fn rec(g: u64, width: usize, s: usize, from: usize, f: &mut impl FnMut(u64) -> bool) -> bool {
        if s == 0 {
            return f(g);
        }
        for pos in from..=(width - s) {
            if !rec(g ^ (1 << pos), width, s - 1, pos + 1, f) {
                return false;
            }
        }
        true
    }
    if s > width {
        return true;
    }
    rec(g, width, s, 0, f)
}

/// Immutable exact Euclidean nearest-neighbor index over embedding rows.
#[derive(Debug, Clone)]
pub struct EuclidIndex {
    vectors: RealEmbeddingMatrix,
}

impl EuclidIndex {
    pub fn build(vectors: RealEmbeddingMatrix) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::EmptyIndex);
        }
        Ok(Self { vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        false // build rejects empty matrices
    }

    pub fn vectors(&self) -> &RealEmbeddingMatrix {
        &self.vectors
    }

    /// Exact nearest row: `(word id, Euclidean distance)`, smallest id on
    /// ties. Comparison happens on squared distances; the root is taken once
    /// at the end.
    pub fn nearest(&self, query: &[f64]) -> Result<(u32, f64)> {
        if query.len() != self.vectors.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.vectors.dim(),
                actual: query.len(),
            });
        }
        let mut best = (0u32, f64::INFINITY);
        for (i, row) in self.vectors.rows().enumerate() {
            let d2: f64 = row
                .iter()
                .zip(query)
                .map(|(&x, &q)| {
                    let diff = f64::from(x) - q;
                    diff * diff
                })
                .sum();
            if d2 < best.1 {
                best = (i as u32, d2);
            }
        }
        Ok((best.0, best.1.sqrt()))
    }

    /// One `nearest` per query; parallel when the `parallel` feature is on.
    pub fn nearest_batch(&self, queries: &[Vec<f64>]) -> Result<Vec<(u32, f64)>> {
        #[cfg(feature = "parallel")]
        {
            queries.par_iter().map(|q| self.nearest(q)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.nearest_batch_seq(queries)
        }
    }

    /// Sequential twin of [`nearest_batch`](Self::nearest_batch).
    pub fn nearest_batch_seq(&self, queries: &[Vec<f64>]) -> Result<Vec<(u32, f64)>> {
        queries.iter().map(|q| self.nearest(q)).collect()
    }
}
