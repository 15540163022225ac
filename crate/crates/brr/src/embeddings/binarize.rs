//! Deterministic real-to-binary code constructions.
//!
//! Two schemes: per-column median thresholding (rank-preserving, one bit per
//! input dimension) and seeded random-hyperplane signs (any target width).
//! Both are reproducible without training; neither needs the original reals
//! at query time.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{BinaryCodeMatrix, RealEmbeddingMatrix};
use crate::error::{Error, Result};

/// Threshold each column at its lower median; bit = value strictly above.
///
/// Even row counts use the lower median and the comparison is strict, so the
/// result depends only on the within-column ranking of values, never on their
/// scale. A constant column yields all-zero bits.
pub fn binarize_median(real: &RealEmbeddingMatrix) -> Result<BinaryCodeMatrix> {
    if real.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let count = real.len();
    let dim = real.dim();

    let medians = column_medians(real);

    let mut out = BinaryCodeMatrix::zeroed(dim, count);
    for i in 0..count {
        let row = real.row(i);
        for (j, &m) in medians.iter().enumerate() {
            if row[j] > m {
                out.set_bit(i, j);
            }
        }
    }
    Ok(out)
}

fn column_medians(real: &RealEmbeddingMatrix) -> Vec<f32> {
    let lower_median = |j: usize| {
        let mut col: Vec<f32> = real.rows().map(|r| r[j]).collect();
        col.sort_unstable_by(f32::total_cmp);
        col[(col.len() - 1) / 2]
    };
    #[cfg(feature = "parallel")]
    {
        (0..real.dim()).into_par_iter().map(lower_median).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..real.dim()).map(lower_median).collect()
    }
}

/// Project rows onto `target_bits` seeded pseudo-random unit directions and
/// keep the signs. The same seed always produces the same directions, hence
/// the same codes.
pub fn binarize_hyperplane(
    real: &RealEmbeddingMatrix,
    target_bits: usize,
    seed: u64,
) -> Result<BinaryCodeMatrix> {
    assert!(target_bits >= 1, "target_bits must be positive");
    if real.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let count = real.len();
    let dim = real.dim();
    let planes = hyperplanes(dim, target_bits, seed);

    let wpc = super::words_per_code(target_bits);
    let row_words = |i: usize| {
        let row = real.row(i);
        let mut words = vec![0u64; wpc];
        for (j, h) in planes.chunks_exact(dim).enumerate() {
            let dot: f64 = row
                .iter()
                .zip(h)
                .map(|(&x, &d)| f64::from(x) * d)
                .sum();
            if dot > 0.0 {
                words[j / 64] |= 1 << (j % 64);
            }
        }
        words
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<u64>> = (0..count).into_par_iter().map(row_words).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<u64>> = (0..count).map(row_words).collect();

    let mut data = Vec::with_capacity(wpc * count);
    for r in rows {
        data.extend_from_slice(&r);
    }
    BinaryCodeMatrix::from_words(target_bits, count, data)
}

/// `target_bits` unit directions of `dim` components, flattened row-major.
fn hyperplanes(dim: usize, target_bits: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut planes = Vec::with_capacity(dim * target_bits);
    for _ in 0..target_bits {
        let start = planes.len();
        loop {
            planes.truncate(start);
            for _ in 0..dim {
                planes.push(StandardNormal.sample(&mut rng));
            }
            let norm = planes[start..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in &mut planes[start..] {
                    *v /= norm;
                }
                break;
            }
        }
    }
    planes
}
