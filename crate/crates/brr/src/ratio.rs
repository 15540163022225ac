//! Pairwise-distance aggregates and the privacy ratio.
//!
//! Comparing two mechanisms at the same `eps` is meaningless when their
//! metrics live on different scales, because the guarantee is `eps * d`.
//! This module computes a space's worst-case (`p_max`) and average (`p_avg`)
//! pairwise distance, the ratio between two spaces, and the transferred
//! budget `eps_b = ratio * eps_a` that equalizes the estimated privacy loss
//! `eps * P_d` on both sides.
//!
//! Averages follow the ordered-pair convention: every `(x, x')` pair counts,
//! self-pairs included, with divisor `|X|^2`. The unordered-distinct variant
//! exists behind [`PairSemantics`] but is never the default.

use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::embeddings::{hamming_words, BinaryCodeMatrix, RealEmbeddingMatrix};
use crate::error::{Error, Result};
use crate::noise::check_epsilon;
use crate::util::{run_rows, Neumaier};

/// Distance metric a [`DistanceAggregate`] was computed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Hamming,
    Euclidean,
}

/// Which aggregate drives a ratio or bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateKind {
    /// Worst-case pairwise distance `p_max`.
    Max,
    /// Ordered-pair average `p_avg`.
    Avg,
}

/// Pair enumeration convention for averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairSemantics {
    /// All `|X|^2` ordered pairs, self-pairs included (the contract).
    #[default]
    OrderedWithSelf,
    /// Unordered distinct pairs, divisor `|X|(|X|-1)/2`. Opt-in only.
    UnorderedDistinct,
}

/// Controls for the aggregate computations.
#[derive(Debug, Clone, Copy)]
pub struct AggregateOptions {
    pub pair_semantics: PairSemantics,
    /// Largest vocabulary still enumerated exactly; larger inputs switch to
    /// seeded uniform pair sampling and set `exact = false`.
    pub exact_threshold: usize,
    /// Number of pairs drawn in sampled mode.
    pub sample_pairs: usize,
    pub seed: u64,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        Self {
            pair_semantics: PairSemantics::OrderedWithSelf,
            exact_threshold: 20_000,
            sample_pairs: 1_000_000,
            seed: 0,
        }
    }
}

/// Distance summary of one embedding space.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DistanceAggregate {
    pub metric: Metric,
    pub p_max: f64,
    pub p_avg: f64,
    pub pair_count: u64,
    pub exact: bool,
}

impl DistanceAggregate {
    pub fn select(&self, kind: AggregateKind) -> f64 {
        match kind {
            AggregateKind::Max => self.p_max,
            AggregateKind::Avg => self.p_avg,
        }
    }
}

/// Outcome of an epsilon transfer between two spaces.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub metric_a: Metric,
    pub metric_b: Metric,
    pub aggregate_kind: AggregateKind,
    pub p_a: f64,
    pub p_b: f64,
    pub ratio: f64,
    pub epsilon_a: f64,
    pub epsilon_b: f64,
    pub exact_a: bool,
    pub exact_b: bool,
    pub pair_counts: [u64; 2],
}

/// Exact (or, above the threshold, sampled) Hamming aggregates with default
/// options.
pub fn aggregate_distances_hamming(codes: &BinaryCodeMatrix) -> Result<DistanceAggregate> {
    aggregate_distances_hamming_with(codes, &AggregateOptions::default())
}

pub fn aggregate_distances_hamming_with(
    codes: &BinaryCodeMatrix,
    opts: &AggregateOptions,
) -> Result<DistanceAggregate> {
    hamming_aggregate(codes, opts, true)
}

/// Sequential twin of [`aggregate_distances_hamming_with`]; same result.
pub fn aggregate_distances_hamming_seq(
    codes: &BinaryCodeMatrix,
    opts: &AggregateOptions,
) -> Result<DistanceAggregate> {
    hamming_aggregate(codes, opts, false)
}

/// Exact (or sampled) Euclidean aggregates with default options.
pub fn aggregate_distances_euclid(vectors: &RealEmbeddingMatrix) -> Result<DistanceAggregate> {
    aggregate_distances_euclid_with(vectors, &AggregateOptions::default())
}

pub fn aggregate_distances_euclid_with(
    vectors: &RealEmbeddingMatrix,
    opts: &AggregateOptions,
) -> Result<DistanceAggregate> {
    euclid_aggregate(vectors, opts, true)
}

/// Sequential twin of [`aggregate_distances_euclid_with`]; bit-identical
/// result (per-row partials are reduced in row order in both modes).
pub fn aggregate_distances_euclid_seq(
    vectors: &RealEmbeddingMatrix,
    opts: &AggregateOptions,
) -> Result<DistanceAggregate> {
    euclid_aggregate(vectors, opts, false)
}

/// `eps_b = (P_dA / P_dB) * eps_a`, equalizing `eps * P_d` across spaces.
pub fn transfer_epsilon(
    epsilon_a: f64,
    agg_a: &DistanceAggregate,
    agg_b: &DistanceAggregate,
    kind: AggregateKind,
) -> Result<RatioReport> {
    check_epsilon(epsilon_a)?;
    let p_a = agg_a.select(kind);
    let p_b = agg_b.select(kind);
    if p_b <= 0.0 {
        return Err(Error::DegenerateTargetSpace);
    }
    let ratio = p_a / p_b;
    Ok(RatioReport {
        metric_a: agg_a.metric,
        metric_b: agg_b.metric,
        aggregate_kind: kind,
        p_a,
        p_b,
        ratio,
        epsilon_a,
        epsilon_b: ratio * epsilon_a,
        exact_a: agg_a.exact,
        exact_b: agg_b.exact,
        pair_counts: [agg_a.pair_count, agg_b.pair_count],
    })
}

/// Upper bound `eps * P_d` on the privacy loss over the whole space.
pub fn privacy_loss_bound(epsilon: f64, agg: &DistanceAggregate, kind: AggregateKind) -> f64 {
    assert!(
        epsilon.is_finite() && epsilon > 0.0,
        "epsilon must be positive and finite"
    );
    epsilon * agg.select(kind)
}

fn hamming_aggregate(
    codes: &BinaryCodeMatrix,
    opts: &AggregateOptions,
    parallel: bool,
) -> Result<DistanceAggregate> {
    let n = codes.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if n > opts.exact_threshold {
        return sampled_aggregate(n, opts, Metric::Hamming, |i, j| {
            f64::from(hamming_words(codes.code_words(i), codes.code_words(j)))
        });
    }

    // one (max, sum) pair per row; identical work in both execution modes,
    // reduced in row order afterwards
    let row_stats = |i: usize| -> (u32, u64) {
        let a = codes.code_words(i);
        let js = match opts.pair_semantics {
            PairSemantics::OrderedWithSelf => 0..n,
            PairSemantics::UnorderedDistinct => i + 1..n,
        };
        let mut max = 0u32;
        let mut sum = 0u64;
        for j in js {
            let d = hamming_words(a, codes.code_words(j));
            max = max.max(d);
            sum += u64::from(d);
        }
        (max, sum)
    };
    let rows = run_rows(n, parallel, row_stats);

    let p_max = f64::from(rows.iter().map(|r| r.0).max().unwrap_or(0));
    let total: u128 = rows.iter().map(|r| u128::from(r.1)).sum();
    let pair_count = pair_count(n, opts.pair_semantics);
    let p_avg = if pair_count == 0 {
        0.0
    } else {
        total as f64 / pair_count as f64
    };
    Ok(DistanceAggregate {
        metric: Metric::Hamming,
        p_max,
        p_avg,
        pair_count,
        exact: true,
    })
}

fn euclid_aggregate(
    vectors: &RealEmbeddingMatrix,
    opts: &AggregateOptions,
    parallel: bool,
) -> Result<DistanceAggregate> {
    let n = vectors.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if n > opts.exact_threshold {
        return sampled_aggregate(n, opts, Metric::Euclidean, |i, j| {
            euclid_distance(vectors.row(i), vectors.row(j))
        });
    }

    let row_stats = |i: usize| -> (f64, f64) {
        let a = vectors.row(i);
        let js = match opts.pair_semantics {
            PairSemantics::OrderedWithSelf => 0..n,
            PairSemantics::UnorderedDistinct => i + 1..n,
        };
        let mut max = 0.0f64;
        let mut sum = Neumaier::default();
        for j in js {
            let d = euclid_distance(a, vectors.row(j));
            max = max.max(d);
            sum.add(d);
        }
        (max, sum.value())
    };
    let rows = run_rows(n, parallel, row_stats);

    let p_max = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let mut total = Neumaier::default();
    for r in &rows {
        total.add(r.1);
    }
    let pair_count = pair_count(n, opts.pair_semantics);
    let p_avg = if pair_count == 0 {
        0.0
    } else {
        total.value() / pair_count as f64
    };
    Ok(DistanceAggregate {
        metric: Metric::Euclidean,
        p_max,
        p_avg,
        pair_count,
        exact: true,
    })
}

/// Seeded uniform pair sample; the same seed always draws the same pairs.
fn sampled_aggregate(
    n: usize,
    opts: &AggregateOptions,
    metric: Metric,
    distance: impl Fn(usize, usize) -> f64 + Sync,
) -> Result<DistanceAggregate> {
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    let mut pairs = Vec::with_capacity(opts.sample_pairs);
    while pairs.len() < opts.sample_pairs {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if matches!(opts.pair_semantics, PairSemantics::UnorderedDistinct) && i == j {
            continue;
        }
        pairs.push((i, j));
    }

    #[cfg(feature = "parallel")]
    let dists: Vec<f64> = pairs.par_iter().map(|&(i, j)| distance(i, j)).collect();
    #[cfg(not(feature = "parallel"))]
    let dists: Vec<f64> = pairs.iter().map(|&(i, j)| distance(i, j)).collect();

    let p_max = dists.iter().copied().fold(0.0, f64::max);
    let mut sum = Neumaier::default();
    for d in &dists {
        sum.add(*d);
    }
    Ok(DistanceAggregate {
        metric,
        p_max,
        p_avg: sum.value() / opts.sample_pairs as f64,
        pair_count: opts.sample_pairs as u64,
        exact: false,
    })
}

fn pair_count(n: usize, semantics: PairSemantics) -> u64 {
    let n = n as u64;
    match semantics {
        PairSemantics::OrderedWithSelf => n * n,
        PairSemantics::UnorderedDistinct => n * (n - 1) / 2,
    }
}

fn euclid_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
