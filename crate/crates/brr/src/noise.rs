//! Noise primitives: randomized response over packed bits and additive
//! Euclidean noise for real embeddings.
//!
//! Randomized response keeps each bit with probability `e^eps / (1 + e^eps)`
//! and flips it otherwise. Instead of drawing one Bernoulli per bit, the
//! sampler draws the flip *count* from a binomial, picks that many distinct
//! positions uniformly, and applies a single XOR mask — the same distribution
//! with far fewer RNG calls on wide codes.
//!
//! All functions take the RNG explicitly; determinism is the caller's choice
//! of seed (see [`crate::rng::RngStream`]).

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, StandardNormal};

use crate::embeddings::{Code, CodeRef};
use crate::error::{Error, Result};

/// Widest code for which exact distributions are enumerated (`2^20` outcomes).
pub const MAX_EXACT_BITS: usize = 20;

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveEpsilon(epsilon))
    }
}

/// Probability `e^eps / (1 + e^eps)` that randomized response keeps a bit.
///
/// Computed as `1 / (1 + e^-eps)` so large `eps` saturates to 1 smoothly
/// instead of overflowing.
pub fn rr_keep_probability(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok(1.0 / (1.0 + (-epsilon).exp()))
}

/// Probability `1 / (1 + e^eps)` that randomized response flips a bit.
pub fn rr_flip_probability(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let t = (-epsilon).exp();
    Ok(t / (1.0 + t))
}

/// Flip each bit of `code` independently with probability
/// [`rr_flip_probability`], via one binomial draw and an XOR mask.
pub fn rr_perturb<R: Rng + ?Sized>(code: CodeRef<'_>, epsilon: f64, rng: &mut R) -> Result<Code> {
    let q = rr_flip_probability(epsilon)?;
    let bits = code.bits();
    let flips = Binomial::new(bits as u64, q)
        .expect("flip probability is in (0, 1/2]")
        .sample(rng) as usize;
    let mut mask = Code::zero(bits);
    for pos in rand::seq::index::sample(rng, bits, flips) {
        mask.set_bit(pos);
    }
    let mut out = code.to_owned();
    out.xor_assign(mask.as_ref())?;
    Ok(out)
}

/// Exact output distribution of randomized response on input `w`.
///
/// Entry `y` of the result is `p^(bits - d) * q^d` with `d = hamming(w, y)`.
/// Only feasible for small widths; wider requests fail with
/// [`Error::CodeSpaceTooLarge`].
pub fn rr_exact_distribution(bits: usize, epsilon: f64, w: u64) -> Result<Vec<f64>> {
    assert!(bits >= 1, "bit width must be positive");
    if bits > MAX_EXACT_BITS {
        return Err(Error::CodeSpaceTooLarge {
            bits,
            max_bits: MAX_EXACT_BITS,
        });
    }
    assert!(
        bits == 64 || w >> bits == 0,
        "input wider than the code space"
    );
    let p = rr_keep_probability(epsilon)?;
    let q = 1.0 - p;
    // per-distance probabilities p^(b-d) q^d, computed once
    let by_distance: Vec<f64> = (0..=bits)
        .map(|d| p.powi((bits - d) as i32) * q.powi(d as i32))
        .collect();
    Ok((0..1u64 << bits)
        .map(|y| by_distance[(w ^ y).count_ones() as usize])
        .collect())
}

/// Additive noise for Euclidean embeddings: a uniformly random direction
/// scaled by a Gamma(dim, 1/eps) radius, so `E[||z||] = dim / eps`.
pub fn madlib_noise<R: Rng + ?Sized>(dim: usize, epsilon: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    assert!(dim >= 1, "dimension must be positive");
    let radius = Gamma::new(dim as f64, 1.0 / epsilon)
        .expect("shape and scale are positive")
        .sample(rng);
    let mut z = unit_direction(dim, rng);
    for v in &mut z {
        *v *= radius;
    }
    Ok(z)
}

/// Uniform point on the unit sphere from a normalized Gaussian vector.
///
/// This is the direction component of [`madlib_noise`], exposed so callers
/// can verify or reuse it on its own.
pub fn unit_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // a zero draw has probability zero; resampling keeps the output unit
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
