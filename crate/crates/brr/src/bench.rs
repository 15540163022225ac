//! Desk-scale efficiency measurements: storage footprint and per-word
//! privatization latency for the binary pipeline vs the Euclidean baseline.
//!
//! Storage numbers are pure arithmetic over the in-memory layout (IEEE-754
//! single precision rows vs packed 64-bit code words), never filesystem
//! sizes. Latency loops are single-threaded, warm up before timing, and
//! include RNG cost — drawing the noise is part of the mechanism. Both
//! mechanisms run exact nearest-neighbor decoding so the comparison isolates
//! the representation, not index approximation tricks.

use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::embeddings::{
    binarize_hyperplane, BinaryCodeMatrix, RealEmbeddingMatrix, Vocabulary,
};
use crate::error::{Error, Result};
use crate::mechanisms::{BrrMechanism, MadlibMechanism, Mechanism};
use crate::nn::Acceleration;
use crate::rng::RngStream;

/// Exact byte accounting for one vocabulary stored both ways.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StorageReport {
    /// Raw UTF-8 bytes of all vocabulary words (shared by both layouts).
    pub vocab_bytes: u64,
    /// `count * dim * 4`.
    pub real_payload_bytes: u64,
    /// `count * ceil(bits / 64) * 8`.
    pub binary_payload_bytes: u64,
    /// Payload plus vocabulary text.
    pub real_bytes: u64,
    pub binary_bytes: u64,
    /// `100 * (1 - binary_payload / real_payload)`.
    pub payload_compression_pct: f64,
    /// `100 * (1 - binary_bytes / real_bytes)`, vocabulary included.
    pub compression_pct: f64,
}

/// Timing summary of one measurement loop.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LatencyReport {
    pub median_ns_per_word: f64,
    pub mean_ns_per_word: f64,
    /// Individual timed calls (sample length times repetitions).
    pub words_timed: u64,
    /// FNV-1a over the produced words; equal seeds give equal digests.
    pub output_digest: u64,
}

/// Full comparison produced by [`run_bench`].
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub vocab_size: usize,
    pub real_dim: usize,
    pub binary_bits: usize,
    pub real_bytes: u64,
    pub binary_bytes: u64,
    pub compression_pct: f64,
    pub payload_compression_pct: f64,
    pub brr_ns_per_word: f64,
    pub madlib_ns_per_word: f64,
    /// `100 * (1 - brr / madlib)` over the median latencies.
    pub speedup_pct: f64,
    pub brr_index_build_ms: f64,
    pub madlib_index_build_ms: f64,
    pub harness_ns_per_word: f64,
    pub samples: usize,
    pub repetitions: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Decode configuration note: both sides use exact search.
    pub nn_mode: &'static str,
}

/// Inputs for [`run_bench`].
#[derive(Debug, Clone, Copy)]
pub struct BenchConfig {
    pub vocab_size: usize,
    pub dim: usize,
    pub bits: usize,
    pub epsilon: f64,
    /// Distinct words drawn from the vocabulary and timed per repetition.
    pub samples: usize,
    pub repetitions: usize,
    pub seed: u64,
}

/// Byte accounting for a vocabulary stored as real rows vs packed codes.
pub fn measure_storage(
    vocab: &Vocabulary,
    real: &RealEmbeddingMatrix,
    codes: &BinaryCodeMatrix,
) -> Result<StorageReport> {
    if vocab.len() != real.len() {
        return Err(Error::VocabMismatch {
            vocab: vocab.len(),
            what: "embedding",
            rows: real.len(),
        });
    }
    if vocab.len() != codes.len() {
        return Err(Error::VocabMismatch {
            vocab: vocab.len(),
            what: "binary code",
            rows: codes.len(),
        });
    }
    let vocab_bytes: u64 = vocab.words().iter().map(|w| w.len() as u64).sum();
    let real_payload = (vocab.len() * real.dim() * 4) as u64;
    let binary_payload = (vocab.len() * codes.words_per_code() * 8) as u64;
    let real_bytes = real_payload + vocab_bytes;
    let binary_bytes = binary_payload + vocab_bytes;
    Ok(StorageReport {
        vocab_bytes,
        real_payload_bytes: real_payload,
        binary_payload_bytes: binary_payload,
        real_bytes,
        binary_bytes,
        payload_compression_pct: reduction_pct(real_payload, binary_payload),
        compression_pct: reduction_pct(real_bytes, binary_bytes),
    })
}

fn reduction_pct(before: u64, after: u64) -> f64 {
    if before == 0 {
        0.0
    } else {
        100.0 * (1.0 - after as f64 / before as f64)
    }
}

/// Time `mechanism` over `sample`, one privatization per timed call.
///
/// One untimed warm-up pass runs first; the timed passes then draw from a
/// fresh stream of `seed`, so the digest depends only on the seed and the
/// sample, not on warm-up behavior.
pub fn measure_latency<S: AsRef<str>>(
    mechanism: &Mechanism,
    epsilon: f64,
    sample: &[S],
    repetitions: usize,
    seed: u64,
) -> Result<LatencyReport> {
    if sample.is_empty() || repetitions == 0 {
        return Err(Error::EmptySample);
    }
    let mut warm_rng = RngStream::new(seed, STREAM_WARMUP).rng();
    for word in sample {
        mechanism.privatize(word.as_ref(), epsilon, &mut warm_rng)?;
    }

    let mut rng = RngStream::new(seed, STREAM_TIMED).rng();
    let mut nanos = Vec::with_capacity(sample.len() * repetitions);
    let mut digest = FNV_OFFSET;
    for _ in 0..repetitions {
        for word in sample {
            let start = Instant::now();
            let out = mechanism.privatize(word.as_ref(), epsilon, &mut rng)?;
            nanos.push(start.elapsed().as_nanos() as u64);
            digest = fnv1a(digest, out.as_bytes());
        }
    }
    Ok(summarize(nanos, digest))
}

/// Time the measurement loop around a do-nothing mechanism, so callers can
/// separate harness cost (clock reads, loop control) from mechanism cost.
pub fn measure_harness_overhead<S: AsRef<str>>(
    sample: &[S],
    repetitions: usize,
) -> Result<LatencyReport> {
    if sample.is_empty() || repetitions == 0 {
        return Err(Error::EmptySample);
    }
    let mut nanos = Vec::with_capacity(sample.len() * repetitions);
    let mut digest = FNV_OFFSET;
    for _ in 0..repetitions {
        for word in sample {
            let start = Instant::now();
            let out = std::hint::black_box(word.as_ref());
            nanos.push(start.elapsed().as_nanos() as u64);
            digest = fnv1a(digest, out.as_bytes());
        }
    }
    Ok(summarize(nanos, digest))
}

fn summarize(mut nanos: Vec<u64>, digest: u64) -> LatencyReport {
    let words_timed = nanos.len() as u64;
    let mean = nanos.iter().sum::<u64>() as f64 / words_timed as f64;
    nanos.sort_unstable();
    let mid = nanos.len() / 2;
    let median = if nanos.len() % 2 == 1 {
        nanos[mid] as f64
    } else {
        (nanos[mid - 1] + nanos[mid]) as f64 / 2.0
    };
    LatencyReport {
        median_ns_per_word: median,
        mean_ns_per_word: mean,
        words_timed,
        output_digest: digest,
    }
}

/// Deterministic synthetic vocabulary (`w0`, `w1`, …) with standard-normal
/// embedding rows; the same seed always produces the same matrix.
pub fn synthetic_embeddings(
    vocab_size: usize,
    dim: usize,
    seed: u64,
) -> Result<(Vocabulary, RealEmbeddingMatrix)> {
    assert!(vocab_size >= 1 && dim >= 1);
    let words: Vec<String> = (0..vocab_size).map(|i| format!("w{i}")).collect();
    let mut rng = RngStream::new(seed, STREAM_SYNTH).rng();
    let data: Vec<f32> = (0..vocab_size * dim)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Ok((
        Vocabulary::new(words)?,
        RealEmbeddingMatrix::from_data(dim, data)?,
    ))
}

/// Synthesize a vocabulary, build both mechanisms, and measure everything.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    let (vocab, real) = synthetic_embeddings(config.vocab_size, config.dim, config.seed)?;
    let codes = binarize_hyperplane(&real, config.bits, config.seed)?;
    let storage = measure_storage(&vocab, &real, &codes)?;

    // sample words spread across the vocabulary, deterministically
    let samples = config.samples.max(1).min(config.vocab_size);
    let step = (config.vocab_size / samples).max(1);
    let sample: Vec<String> = (0..samples)
        .map(|i| vocab.word(((i * step) % config.vocab_size) as u32).to_owned())
        .collect();

    let t = Instant::now();
    let brr = Mechanism::Brr(BrrMechanism::new(
        vocab.clone(),
        codes,
        Acceleration::LinearScan,
    )?);
    let brr_build_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let madlib = Mechanism::Madlib(MadlibMechanism::new(vocab, real)?);
    let madlib_build_ms = t.elapsed().as_secs_f64() * 1e3;

    let reps = config.repetitions.max(1);
    let harness = measure_harness_overhead(&sample, reps)?;
    let brr_lat = measure_latency(&brr, config.epsilon, &sample, reps, config.seed)?;
    let madlib_lat = measure_latency(&madlib, config.epsilon, &sample, reps, config.seed)?;

    Ok(BenchReport {
        vocab_size: config.vocab_size,
        real_dim: config.dim,
        binary_bits: config.bits,
        real_bytes: storage.real_bytes,
        binary_bytes: storage.binary_bytes,
        compression_pct: storage.compression_pct,
        payload_compression_pct: storage.payload_compression_pct,
        brr_ns_per_word: brr_lat.median_ns_per_word,
        madlib_ns_per_word: madlib_lat.median_ns_per_word,
        speedup_pct: 100.0 * (1.0 - brr_lat.median_ns_per_word / madlib_lat.median_ns_per_word),
        brr_index_build_ms: brr_build_ms,
        madlib_index_build_ms: madlib_build_ms,
        harness_ns_per_word: harness.median_ns_per_word,
        samples,
        repetitions: reps,
        epsilon: config.epsilon,
        seed: config.seed,
        nn_mode: "exact linear-scan decoding for both mechanisms",
    })
}

const STREAM_WARMUP: u64 = 0xBE7C_0001;
const STREAM_TIMED: u64 = 0xBE7C_0002;
const STREAM_SYNTH: u64 = 0xBE7C_0003;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    // word separator so ["ab","c"] and ["a","bc"] differ
    hash ^= 0x1F;
    hash.wrapping_mul(0x100_0000_01b3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn storage_fixture(words: &[&str], dim: usize, bits: usize) -> StorageReport {
        let vocab = Vocabulary::new(words.iter().map(|w| w.to_string()).collect()).unwrap();
        let real = RealEmbeddingMatrix::from_data(dim, vec![0.5; words.len() * dim]).unwrap();
        let codes = BinaryCodeMatrix::zeroed(bits, words.len());
        measure_storage(&vocab, &real, &codes).unwrap()
    }

    #[test]
    fn storage_single_word_flagship_numbers() {
        // dim 300 / bits 256: 1200 vs 32 payload bytes per word
        let s = storage_fixture(&["ab"], 300, 256);
        assert_eq!(s.real_payload_bytes, 1200);
        assert_eq!(s.binary_payload_bytes, 32);
        assert!((s.payload_compression_pct - 100.0 * (1.0 - 32.0 / 1200.0)).abs() < 1e-12);
        assert_eq!(s.vocab_bytes, 2);
        assert_eq!(s.real_bytes, 1202);
        assert_eq!(s.binary_bytes, 34);
    }

    #[test]
    fn storage_equal_widths_mean_zero_compression() {
        // bits = 32 * dim: packed codes occupy exactly the real payload
        let s = storage_fixture(&["a", "b"], 2, 64);
        assert_eq!(s.real_payload_bytes, s.binary_payload_bytes);
        assert_eq!(s.payload_compression_pct, 0.0);
    }

    #[test]
    fn storage_scales_linearly_with_vocab() {
        let one = storage_fixture(&["aa"], 300, 256);
        let two = storage_fixture(&["aa", "bb"], 300, 256);
        assert_eq!(two.real_payload_bytes, 2 * one.real_payload_bytes);
        assert_eq!(two.binary_payload_bytes, 2 * one.binary_payload_bytes);
        assert!((two.payload_compression_pct - one.payload_compression_pct).abs() < 1e-12);
        assert!((two.compression_pct - one.compression_pct).abs() < 1e-12);
    }

    #[test]
    fn storage_rejects_mismatched_rows() {
        let vocab = Vocabulary::new(vec!["a".into(), "b".into()]).unwrap();
        let real = RealEmbeddingMatrix::from_data(2, vec![0.0; 4]).unwrap();
        let codes = BinaryCodeMatrix::zeroed(8, 1);
        assert!(matches!(
            measure_storage(&vocab, &real, &codes),
            Err(Error::VocabMismatch { vocab: 2, rows: 1, .. })
        ));
    }

    #[test]
    fn latency_guards_empty_inputs() {
        let (vocab, real) = synthetic_embeddings(4, 3, 0).unwrap();
        let m = Mechanism::Madlib(MadlibMechanism::new(vocab, real).unwrap());
        assert!(matches!(
            measure_latency(&m, 1.0, &Vec::<String>::new(), 3, 0),
            Err(Error::EmptySample)
        ));
        assert!(matches!(
            measure_latency(&m, 1.0, &["w0"], 0, 0),
            Err(Error::EmptySample)
        ));
        assert!(matches!(
            measure_harness_overhead(&Vec::<String>::new(), 1),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn latency_outputs_are_seed_deterministic() {
        let (vocab, real) = synthetic_embeddings(30, 6, 3).unwrap();
        let codes = binarize_hyperplane(&real, 16, 3).unwrap();
        let m = Mechanism::Brr(
            BrrMechanism::new(vocab, codes, Acceleration::LinearScan).unwrap(),
        );
        let sample = ["w0", "w5", "w11", "w29"];
        let a = measure_latency(&m, 0.5, &sample, 5, 42).unwrap();
        let b = measure_latency(&m, 0.5, &sample, 5, 42).unwrap();
        assert_eq!(a.output_digest, b.output_digest);
        assert_eq!(a.words_timed, 20);
        let c = measure_latency(&m, 0.5, &sample, 5, 43).unwrap();
        assert_ne!(a.output_digest, c.output_digest, "different seed, same outputs");
    }

    #[test]
    fn bench_report_is_internally_consistent() {
        let report = run_bench(&BenchConfig {
            vocab_size: 60,
            dim: 16,
            bits: 32,
            epsilon: 1.0,
            samples: 20,
            repetitions: 2,
            seed: 7,
        })
        .unwrap();
        assert_eq!(report.vocab_size, 60);
        let expected = 100.0 * (1.0 - report.binary_bytes as f64 / report.real_bytes as f64);
        assert!((report.compression_pct - expected).abs() < 1e-12);
        let speedup = 100.0 * (1.0 - report.brr_ns_per_word / report.madlib_ns_per_word);
        assert!((report.speedup_pct - speedup).abs() < 1e-12);
        assert!(report.brr_ns_per_word > 0.0 && report.madlib_ns_per_word > 0.0);

        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "vocab_size", "real_dim", "binary_bits", "real_bytes", "binary_bytes",
            "compression_pct", "brr_ns_per_word", "madlib_ns_per_word", "speedup_pct",
            "brr_index_build_ms", "madlib_index_build_ms", "samples", "seed",
        ] {
            assert!(json.get(key).is_some(), "missing field {key}");
        }
    }
}
