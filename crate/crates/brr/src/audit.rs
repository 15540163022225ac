//! Brute-force verification of the metric-DP inequality on enumerable
//! instances.
//!
//! For code spaces of at most [`MAX_AUDIT_BITS`] bits the output
//! distributions of randomized response — and of the full
//! binarize/perturb/decode word mechanism — can be written down exactly.
//! The audits do exactly that and then check, for every input pair and
//! every output, that the log-probability ratio stays below `eps` times the
//! input distance. A failure is an implementation bug by construction: the
//! decode step is post-processing and cannot widen the ratio.
//!
//! Probabilities live in log space throughout; ratios of `q^bits`-sized
//! masses at large `eps` underflow linear space long before the caps bite.

use serde::Serialize;

use crate::embeddings::{BinaryCodeMatrix, Code};
use crate::error::{Error, Result};
use crate::nn::{Acceleration, HammingIndex};
use crate::noise::{check_epsilon, rr_flip_probability, rr_keep_probability};
use crate::ratio::aggregate_distances_hamming;
use crate::util::run_rows;

/// Widest code space an audit will enumerate.
pub const MAX_AUDIT_BITS: usize = 10;

/// Largest vocabulary the word-level audit will enumerate.
pub const MAX_AUDIT_WORDS: usize = 32;

/// Slack for the pass verdict: float enumeration of a true-by-theorem bound.
const PASS_SLACK: f64 = 1e-9;

/// Outcome of one exhaustive audit.
#[derive(Debug, Clone, Serialize)]
pub struct AuditResult {
    pub epsilon: f64,
    pub bits: usize,
    /// Number of distinct inputs audited: `2^bits` for the raw-code audit,
    /// the vocabulary size for the word-level audit.
    pub vocab_size: usize,
    /// Largest `ln(Pr[y|w] / Pr[y|w'])` over all inputs `w, w'` and outputs.
    pub max_loss_observed: f64,
    /// `eps * p_max` over the audited input space.
    pub bound: f64,
    /// `bound - max_loss_observed`.
    pub margin: f64,
    /// Largest `sup_y ln-ratio - eps * d(w, w')` over input pairs; at most
    /// ~0 when the per-pair inequality holds.
    pub max_pair_excess: f64,
    /// Raw-code audit only: how far the per-pair supremum strays from
    /// `eps * d(w, w')`. Randomized response attains the bound exactly (at
    /// `y = w`), so this is a float-noise-sized number for a correct
    /// implementation.
    pub tightness_gap: Option<f64>,
    pub pass: bool,
}

fn verdict(
    epsilon: f64,
    bits: usize,
    vocab_size: usize,
    max_loss_observed: f64,
    bound: f64,
    max_pair_excess: f64,
    tightness_gap: Option<f64>,
) -> AuditResult {
    AuditResult {
        epsilon,
        bits,
        vocab_size,
        max_loss_observed,
        bound,
        margin: bound - max_loss_observed,
        max_pair_excess,
        tightness_gap,
        pass: max_loss_observed <= bound + PASS_SLACK && max_pair_excess <= PASS_SLACK,
    }
}

/// Audit raw randomized response over the whole `bits`-wide code space.
///
/// Enumerates every `(w, w', y)` triple, checks the per-pair inequality
/// `ln(Pr[y|w]/Pr[y|w']) <= eps * hamming(w, w')`, and records how tightly
/// the supremum matches it.
pub fn audit_rr(bits: usize, epsilon: f64) -> Result<AuditResult> {
    assert!(bits >= 1, "bit width must be positive");
    if bits > MAX_AUDIT_BITS {
        return Err(Error::CodeSpaceTooLarge {
            bits,
            max_bits: MAX_AUDIT_BITS,
        });
    }
    check_epsilon(epsilon)?;
    let log_probs = rr_log_probs_by_distance(bits, epsilon)?;
    let size = 1usize << bits;

    // per-w partials, reduced in order afterwards (max is order-free anyway)
    let per_w = run_rows(size, true, |w| {
        let w = w as u64;
        let mut max_loss = f64::NEG_INFINITY;
        let mut excess = f64::NEG_INFINITY;
        let mut gap = 0.0f64;
        for w2 in 0..size as u64 {
            let d = (w ^ w2).count_ones();
            let mut sup = f64::NEG_INFINITY;
            for y in 0..size as u64 {
                let loss = log_probs[(w ^ y).count_ones() as usize]
                    - log_probs[(w2 ^ y).count_ones() as usize];
                sup = sup.max(loss);
            }
            let allowed = epsilon * f64::from(d);
            max_loss = max_loss.max(sup);
            excess = excess.max(sup - allowed);
            gap = gap.max((sup - allowed).abs());
        }
        (max_loss, excess, gap)
    });

    let mut max_loss = f64::NEG_INFINITY;
    let mut excess = f64::NEG_INFINITY;
    let mut gap = 0.0f64;
    for (l, e, g) in per_w {
        max_loss = max_loss.max(l);
        excess = excess.max(e);
        gap = gap.max(g);
    }
    let bound = epsilon * bits as f64; // p_max of the full code space
    Ok(verdict(
        epsilon,
        bits,
        size,
        max_loss,
        bound,
        excess,
        Some(gap),
    ))
}

/// Audit the full word mechanism on an enumerable vocabulary.
///
/// Builds the exact word-level output distribution of every input word by
/// summing randomized-response mass over nearest-neighbor cells, then checks
/// the inequality for every word pair and output word.
pub fn audit_brr(codes: &BinaryCodeMatrix, epsilon: f64) -> Result<AuditResult> {
    let bits = codes.bits();
    if bits > MAX_AUDIT_BITS {
        return Err(Error::CodeSpaceTooLarge {
            bits,
            max_bits: MAX_AUDIT_BITS,
        });
    }
    if codes.len() > MAX_AUDIT_WORDS {
        return Err(Error::VocabTooLarge {
            words: codes.len(),
            max_words: MAX_AUDIT_WORDS,
        });
    }
    check_epsilon(epsilon)?;
    let vocab = codes.len();
    if vocab == 0 {
        return Err(Error::EmptyIndex);
    }

    let dists = word_log_distributions(codes, epsilon)?;

    let mut max_loss = f64::NEG_INFINITY;
    let mut excess = f64::NEG_INFINITY;
    for i in 0..vocab {
        for j in 0..vocab {
            let d = crate::embeddings::hamming(codes.code(i), codes.code(j))?;
            let mut sup = f64::NEG_INFINITY;
            for (&a, &b) in dists[i].iter().zip(&dists[j]) {
                if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
                    continue; // output word never wins any code: no mass on either side
                }
                sup = sup.max(a - b);
            }
            max_loss = max_loss.max(sup);
            excess = excess.max(sup - epsilon * f64::from(d));
        }
    }

    let p_max = aggregate_distances_hamming(codes)?.p_max;
    Ok(verdict(
        epsilon,
        bits,
        vocab,
        max_loss,
        epsilon * p_max,
        excess,
        None,
    ))
}

/// Exact output distribution of the word mechanism for input word `word`:
/// entry `j` is `Pr[output = word j]`. Sums to 1 up to float rounding.
pub fn brr_exact_word_distribution(
    codes: &BinaryCodeMatrix,
    epsilon: f64,
    word: u32,
) -> Result<Vec<f64>> {
    assert!((word as usize) < codes.len(), "word id out of range");
    let logs = word_log_distributions(codes, epsilon)?;
    Ok(logs[word as usize].iter().map(|l| l.exp()).collect())
}

/// Log-space word-level output distributions for every input word.
fn word_log_distributions(codes: &BinaryCodeMatrix, epsilon: f64) -> Result<Vec<Vec<f64>>> {
    let bits = codes.bits();
    if bits > MAX_AUDIT_BITS {
        return Err(Error::CodeSpaceTooLarge {
            bits,
            max_bits: MAX_AUDIT_BITS,
        });
    }
    let size = 1usize << bits;
    let vocab = codes.len();
    let log_probs = rr_log_probs_by_distance(bits, epsilon)?;

    // decode cell of every possible perturbed code, tie-break by smallest id
    let index = HammingIndex::build(codes.clone(), Acceleration::LinearScan)?;
    let winners: Vec<u32> = run_rows(size, true, |y| {
        let (id, _) = index
            .nearest(Code::from_value(bits, y as u64).as_ref())
            .expect("query width matches index width");
        id
    });

    Ok(run_rows(vocab, true, |i| {
        let code = codes.code(i);
        let mut cells: Vec<Vec<f64>> = vec![Vec::new(); vocab];
        for (y, &win) in winners.iter().enumerate() {
            let d = (code.chunk(0, bits.min(64)) ^ y as u64).count_ones();
            cells[win as usize].push(log_probs[d as usize]);
        }
        cells.iter().map(|c| log_sum_exp(c)).collect()
    }))
}

fn rr_log_probs_by_distance(bits: usize, epsilon: f64) -> Result<Vec<f64>> {
    let ln_p = rr_keep_probability(epsilon)?.ln();
    let ln_q = rr_flip_probability(epsilon)?.ln();
    Ok((0..=bits)
        .map(|d| (bits - d) as f64 * ln_p + d as f64 * ln_q)
        .collect())
}

/// `ln(sum(exp(values)))`, stable against the usual underflow.
fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}
