//! End-to-end word privatization: the binary randomized-response pipeline
//! and the additive-noise Euclidean baseline, plus token-stream application.
//!
//! Both mechanisms share the same shape: look the word up, perturb its
//! embedding, decode with an exact nearest-neighbor search. The decode step
//! is pure post-processing of an already-private value, so it costs no
//! privacy. Guarantees are metric-DP: the distinguishability of two words is
//! bounded by `eps` times the *distance between their embeddings*, Hamming
//! for the binary pipeline and Euclidean for the baseline — the same number
//! `eps` is not comparable across the two without the ratio machinery in
//! [`crate::ratio`].
//!
//! Out-of-vocabulary tokens default to pass-through so corpora survive the
//! round trip, but a passed-through token has NO privacy guarantee at all;
//! the count is surfaced in the report so the leakage is visible. Use
//! [`OovPolicy::Drop`] when that is unacceptable.

use serde::Serialize;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use rand::Rng;

use crate::embeddings::{BinaryCodeMatrix, RealEmbeddingMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::nn::{Acceleration, EuclidIndex, HammingIndex};
use crate::noise::{madlib_noise, rr_perturb};
use crate::ratio::Metric;
use crate::rng::RngStream;

/// What to do with tokens that are not in the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OovPolicy {
    /// Copy the token through unchanged (no privacy for that token).
    #[default]
    PassThrough,
    /// Omit the token from the output.
    Drop,
}

/// Which pipeline a configuration refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MechanismKind {
    Brr,
    Madlib,
}

impl MechanismKind {
    fn name(self) -> &'static str {
        match self {
            MechanismKind::Brr => "BRR",
            MechanismKind::Madlib => "Madlib",
        }
    }

    fn required_metric(self) -> Metric {
        match self {
            MechanismKind::Brr => Metric::Hamming,
            MechanismKind::Madlib => Metric::Euclidean,
        }
    }
}

fn metric_name(metric: Metric) -> &'static str {
    match metric {
        Metric::Hamming => "Hamming",
        Metric::Euclidean => "Euclidean",
    }
}

/// Privacy budget together with the metric it is denominated in.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub metric: Metric,
}

/// Full stream-privatization configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MechanismConfig {
    pub kind: MechanismKind,
    pub params: PrivacyParams,
    pub oov_policy: OovPolicy,
}

impl MechanismConfig {
    /// A budget only makes sense in the metric its mechanism perturbs in.
    pub fn validate(&self) -> Result<()> {
        let required = self.kind.required_metric();
        if self.params.metric != required {
            return Err(Error::MetricMismatch {
                kind: self.kind.name(),
                required: metric_name(required),
                got: metric_name(self.params.metric),
            });
        }
        Ok(())
    }
}

/// Counts for one privatized stream.
///
/// `unchanged_fraction` is the share of *privatized* tokens whose output
/// equals the input (0 when nothing was privatized); passed-through OOV
/// tokens are excluded so the diagnostic reflects the mechanism, not the
/// vocabulary coverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivatizationReport {
    pub tokens_in: u64,
    pub tokens_privatized: u64,
    pub tokens_oov: u64,
    pub unchanged_fraction: f64,
}

/// Binary pipeline: packed code, randomized response, Hamming decode.
#[derive(Debug, Clone)]
pub struct BrrMechanism {
    vocab: Vocabulary,
    index: HammingIndex,
}

impl BrrMechanism {
    /// Word id `i` must own code row `i`.
    pub fn new(
        vocab: Vocabulary,
        codes: BinaryCodeMatrix,
        acceleration: Acceleration,
    ) -> Result<Self> {
        if vocab.len() != codes.len() {
            return Err(Error::VocabMismatch {
                vocab: vocab.len(),
                what: "binary code",
                rows: codes.len(),
            });
        }
        Ok(Self {
            vocab,
            index: HammingIndex::build(codes, acceleration)?,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn bits(&self) -> usize {
        self.index.bits()
    }

    /// The packed code matrix the decoder searches; row `i` belongs to word id `i`.
    pub fn codes(&self) -> &BinaryCodeMatrix {
        self.index.codes()
    }

    /// Privatize one in-vocabulary word.
    pub fn privatize<R: Rng + ?Sized>(
        &self,
        word: &str,
        epsilon: f64,
        rng: &mut R,
    ) -> Result<&str> {
        let id = self
            .vocab
            .id(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.to_owned()))?;
        let noisy = rr_perturb(self.index.codes().code(id as usize), epsilon, rng)?;
        let (winner, _) = self.index.nearest(noisy.as_ref())?;
        Ok(self.vocab.word(winner))
    }
}

/// Euclidean baseline: real embedding plus heavy-tailed additive noise.
#[derive(Debug, Clone)]
pub struct MadlibMechanism {
    vocab: Vocabulary,
    index: EuclidIndex,
}

impl MadlibMechanism {
    /// Word id `i` must own vector row `i`.
    pub fn new(vocab: Vocabulary, vectors: RealEmbeddingMatrix) -> Result<Self> {
        if vocab.len() != vectors.len() {
            return Err(Error::VocabMismatch {
                vocab: vocab.len(),
                what: "embedding",
                rows: vectors.len(),
            });
        }
        Ok(Self {
            vocab,
            index: EuclidIndex::build(vectors)?,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    /// Privatize one in-vocabulary word.
    pub fn privatize<R: Rng + ?Sized>(
        &self,
        word: &str,
        epsilon: f64,
        rng: &mut R,
    ) -> Result<&str> {
        let id = self
            .vocab
            .id(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.to_owned()))?;
        let noise = madlib_noise(self.index.dim(), epsilon, rng)?;
        let query: Vec<f64> = self
            .index
            .vectors()
            .row(id as usize)
            .iter()
            .zip(&noise)
            .map(|(&x, z)| f64::from(x) + z)
            .collect();
        let (winner, _) = self.index.nearest(&query)?;
        Ok(self.vocab.word(winner))
    }
}

/// Either pipeline behind one stream-processing interface.
#[derive(Debug, Clone)]
pub enum Mechanism {
    Brr(BrrMechanism),
    Madlib(MadlibMechanism),
}

enum TokenOutcome {
    Privatized { output: String, unchanged: bool },
    OovKept(String),
    OovDropped,
}

impl Mechanism {
    pub fn kind(&self) -> MechanismKind {
        match self {
            Mechanism::Brr(_) => MechanismKind::Brr,
            Mechanism::Madlib(_) => MechanismKind::Madlib,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        match self {
            Mechanism::Brr(m) => m.vocab(),
            Mechanism::Madlib(m) => m.vocab(),
        }
    }

    /// Privatize one in-vocabulary word.
    pub fn privatize<R: Rng + ?Sized>(
        &self,
        word: &str,
        epsilon: f64,
        rng: &mut R,
    ) -> Result<&str> {
        match self {
            Mechanism::Brr(m) => m.privatize(word, epsilon, rng),
            Mechanism::Madlib(m) => m.privatize(word, epsilon, rng),
        }
    }

    /// Privatize every token independently, each on its own RNG substream
    /// keyed by position. Parallel when the `parallel` feature is on; the
    /// substream scheme makes the output identical either way.
    pub fn privatize_stream<S: AsRef<str> + Sync>(
        &self,
        tokens: &[S],
        config: &MechanismConfig,
        rng: RngStream,
    ) -> Result<(Vec<String>, PrivatizationReport)> {
        #[cfg(feature = "parallel")]
        {
            self.check_config(config)?;
            let outcomes = tokens
                .par_iter()
                .enumerate()
                .map(|(i, t)| self.one_token(t.as_ref(), config, rng, i))
                .collect::<Result<Vec<_>>>()?;
            Ok(assemble(outcomes))
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.privatize_stream_seq(tokens, config, rng)
        }
    }

    /// Sequential twin of [`privatize_stream`](Self::privatize_stream);
    /// same output for the same seed.
    pub fn privatize_stream_seq<S: AsRef<str>>(
        &self,
        tokens: &[S],
        config: &MechanismConfig,
        rng: RngStream,
    ) -> Result<(Vec<String>, PrivatizationReport)> {
        self.check_config(config)?;
        let outcomes = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| self.one_token(t.as_ref(), config, rng, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(assemble(outcomes))
    }

    fn check_config(&self, config: &MechanismConfig) -> Result<()> {
        config.validate()?;
        let required = self.kind().required_metric();
        if config.params.metric != required {
            return Err(Error::MetricMismatch {
                kind: self.kind().name(),
                required: metric_name(required),
                got: metric_name(config.params.metric),
            });
        }
        Ok(())
    }

    fn one_token(
        &self,
        token: &str,
        config: &MechanismConfig,
        rng: RngStream,
        position: usize,
    ) -> Result<TokenOutcome> {
        if self.vocab().id(token).is_none() {
            return Ok(match config.oov_policy {
                OovPolicy::PassThrough => TokenOutcome::OovKept(token.to_owned()),
                OovPolicy::Drop => TokenOutcome::OovDropped,
            });
        }
        let mut token_rng = rng.substream(position as u64).rng();
        let output = self.privatize(token, config.params.epsilon, &mut token_rng)?;
        Ok(TokenOutcome::Privatized {
            unchanged: output == token,
            output: output.to_owned(),
        })
    }
}

fn assemble(outcomes: Vec<TokenOutcome>) -> (Vec<String>, PrivatizationReport) {
    let tokens_in = outcomes.len() as u64;
    let mut output = Vec::with_capacity(outcomes.len());
    let (mut privatized, mut oov, mut unchanged) = (0u64, 0u64, 0u64);
    for outcome in outcomes {
        match outcome {
            TokenOutcome::Privatized {
                output: word,
                unchanged: same,
            } => {
                privatized += 1;
                unchanged += u64::from(same);
                output.push(word);
            }
            TokenOutcome::OovKept(word) => {
                oov += 1;
                output.push(word);
            }
            TokenOutcome::OovDropped => oov += 1,
        }
    }
    let report = PrivatizationReport {
        tokens_in,
        tokens_privatized: privatized,
        tokens_oov: oov,
        unchanged_fraction: if privatized == 0 {
            0.0
        } else {
            unchanged as f64 / privatized as f64
        },
    };
    (output, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::Code;
    use crate::noise::rr_exact_distribution;
    use proptest::prelude::*;

    fn brr_fixture(bits: usize, values: &[u64]) -> BrrMechanism {
        let words: Vec<String> = (0..values.len()).map(|i| format!("w{i}")).collect();
        let codes: Vec<Code> = values.iter().map(|&v| Code::from_value(bits, v)).collect();
        BrrMechanism::new(
            Vocabulary::new(words).unwrap(),
            BinaryCodeMatrix::from_codes(&codes).unwrap(),
            Acceleration::LinearScan,
        )
        .unwrap()
    }

    fn madlib_fixture(dim: usize, rows: &[f32]) -> MadlibMechanism {
        let count = rows.len() / dim;
        let words: Vec<String> = (0..count).map(|i| format!("w{i}")).collect();
        MadlibMechanism::new(
            Vocabulary::new(words).unwrap(),
            RealEmbeddingMatrix::from_data(dim, rows.to_vec()).unwrap(),
        )
        .unwrap()
    }

    fn config(kind: MechanismKind, epsilon: f64, oov: OovPolicy) -> MechanismConfig {
        MechanismConfig {
            kind,
            params: PrivacyParams {
                epsilon,
                metric: kind.required_metric(),
            },
            oov_policy: oov,
        }
    }

    #[test]
    fn brr_huge_epsilon_keeps_the_word() {
        let m = brr_fixture(16, &[0x0000, 0xFFFF, 0x00FF, 0xFF00]);
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..500 {
            assert_eq!(m.privatize("w2", 50.0, &mut rng).unwrap(), "w2");
        }
    }

    #[test]
    fn brr_exact_distribution_matches_monte_carlo() {
        // 8 words, 6-bit codes, eps = 1: enumerate the exact output
        // distribution of w0 and compare a 200k-draw estimate
        let values = [0b000000u64, 0b000111, 0b111000, 0b111111, 0b010101, 0b101010, 0b001100, 0b110011];
        let m = brr_fixture(6, &values);
        let eps = 1.0;

        let rr = rr_exact_distribution(6, eps, values[0]).unwrap();
        let mut exact = vec![0.0f64; values.len()];
        for (y, pr) in rr.iter().enumerate() {
            let (winner, _) = m.index.nearest(Code::from_value(6, y as u64).as_ref()).unwrap();
            exact[winner as usize] += pr;
        }

        let trials = 200_000u32;
        let mut counts = vec![0u32; values.len()];
        let mut rng = RngStream::new(2, 0).rng();
        for _ in 0..trials {
            let w = m.privatize("w0", eps, &mut rng).unwrap();
            counts[m.vocab.id(w).unwrap() as usize] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(&exact)
            .map(|(&c, e)| (f64::from(c) / f64::from(trials) - e).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "total variation {tv}");
    }

    #[test]
    fn brr_rejects_oov_words() {
        let m = brr_fixture(4, &[0b0000, 0b1111]);
        let mut rng = RngStream::new(3, 0).rng();
        assert!(matches!(
            m.privatize("nope", 1.0, &mut rng),
            Err(Error::OutOfVocabulary(w)) if w == "nope"
        ));
    }

    #[test]
    fn madlib_huge_epsilon_keeps_the_word() {
        let m = madlib_fixture(2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let mut rng = RngStream::new(4, 0).rng();
        for _ in 0..1000 {
            assert_eq!(m.privatize("w1", 1e4, &mut rng).unwrap(), "w1");
        }
    }

    #[test]
    fn madlib_flip_rate_decreases_with_epsilon() {
        let m = madlib_fixture(2, &[0.0, 0.0, 1.0, 0.0]);
        let mut rates = Vec::new();
        for (i, eps) in [1.0, 2.0, 4.0].into_iter().enumerate() {
            let mut rng = RngStream::new(5, i as u64).rng();
            let trials = 100_000;
            let changed = (0..trials)
                .filter(|_| m.privatize("w0", eps, &mut rng).unwrap() != "w0")
                .count();
            rates.push(changed as f64 / f64::from(trials));
        }
        assert!(
            rates[0] > rates[1] && rates[1] > rates[2],
            "flip rates not decreasing: {rates:?}"
        );
    }

    #[test]
    fn stream_handles_empty_input() {
        let m = Mechanism::Brr(brr_fixture(4, &[0b0000, 0b1111]));
        let cfg = config(MechanismKind::Brr, 1.0, OovPolicy::PassThrough);
        let (out, report) = m
            .privatize_stream(&Vec::<String>::new(), &cfg, RngStream::new(0, 0))
            .unwrap();
        assert!(out.is_empty());
        assert_eq!(
            report,
            PrivatizationReport {
                tokens_in: 0,
                tokens_privatized: 0,
                tokens_oov: 0,
                unchanged_fraction: 0.0
            }
        );
    }

    #[test]
    fn stream_passes_oov_through_and_counts_it() {
        let m = Mechanism::Brr(brr_fixture(4, &[0b0000, 0b1111]));
        let cfg = config(MechanismKind::Brr, 1.0, OovPolicy::PassThrough);
        let tokens = ["alpha", "beta", "gamma"];
        let (out, report) = m
            .privatize_stream(&tokens, &cfg, RngStream::new(0, 0))
            .unwrap();
        assert_eq!(out, tokens);
        assert_eq!(report.tokens_oov, 3);
        assert_eq!(report.tokens_privatized, 0);
        assert_eq!(report.unchanged_fraction, 0.0);

        let drop_cfg = config(MechanismKind::Brr, 1.0, OovPolicy::Drop);
        let (out, report) = m
            .privatize_stream(&tokens, &drop_cfg, RngStream::new(0, 0))
            .unwrap();
        assert!(out.is_empty());
        assert_eq!(report.tokens_oov, 3);
    }

    #[test]
    fn stream_tokens_are_independent_per_position() {
        let m = Mechanism::Brr(brr_fixture(8, &[0x00, 0xFF, 0x0F, 0xF0, 0x3C]));
        let cfg = config(MechanismKind::Brr, 0.5, OovPolicy::PassThrough);
        let seed = RngStream::new(9, 7);
        let tokens = ["w0", "w3", "w1", "w1", "w4", "w2"];
        let (out, _) = m.privatize_stream(&tokens, &cfg, seed).unwrap();
        for (i, token) in tokens.iter().enumerate() {
            let mut rng = seed.substream(i as u64).rng();
            let single = m.privatize(token, 0.5, &mut rng).unwrap();
            assert_eq!(out[i], single, "token {i} depends on its neighbors");
        }
    }

    #[test]
    fn stream_parallel_equals_sequential() {
        let m = Mechanism::Brr(brr_fixture(8, &[0x00, 0xFF, 0x0F, 0xF0]));
        let cfg = config(MechanismKind::Brr, 1.0, OovPolicy::PassThrough);
        let tokens: Vec<String> = (0..500).map(|i| format!("w{}", i % 5)).collect(); // w4 is OOV
        let seed = RngStream::new(12, 0);
        let par = m.privatize_stream(&tokens, &cfg, seed).unwrap();
        let seq = m.privatize_stream_seq(&tokens, &cfg, seed).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn config_metric_must_match_mechanism() {
        let bad = MechanismConfig {
            kind: MechanismKind::Brr,
            params: PrivacyParams {
                epsilon: 1.0,
                metric: Metric::Euclidean,
            },
            oov_policy: OovPolicy::PassThrough,
        };
        assert!(matches!(
            bad.validate(),
            Err(Error::MetricMismatch {
                kind: "BRR",
                required: "Hamming",
                got: "Euclidean",
            })
        ));

        // a coherent Madlib config still cannot drive a BRR mechanism
        let m = Mechanism::Brr(brr_fixture(4, &[0b0000, 0b1111]));
        let madlib_cfg = config(MechanismKind::Madlib, 1.0, OovPolicy::PassThrough);
        assert!(matches!(
            m.privatize_stream(&["w0"], &madlib_cfg, RngStream::new(0, 0)),
            Err(Error::MetricMismatch { kind: "BRR", .. })
        ));
    }

    #[test]
    fn mechanism_rejects_mismatched_row_counts() {
        let vocab = Vocabulary::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let codes = BinaryCodeMatrix::zeroed(4, 2);
        assert!(matches!(
            BrrMechanism::new(vocab, codes, Acceleration::LinearScan),
            Err(Error::VocabMismatch { vocab: 3, rows: 2, .. })
        ));
    }

    proptest! {
        #[test]
        fn report_counts_always_balance(
            picks in proptest::collection::vec(0usize..6, 0..40),
            seed in 0u64..1000,
        ) {
            let m = Mechanism::Brr(brr_fixture(8, &[0x00, 0xFF, 0x0F, 0xF0]));
            // indexes 4 and 5 are out of vocabulary
            let tokens: Vec<String> = picks.iter().map(|&p| format!("w{p}")).collect();
            let cfg = config(MechanismKind::Brr, 1.0, OovPolicy::PassThrough);
            let (out, report) = m
                .privatize_stream(&tokens, &cfg, RngStream::new(seed, 0))
                .unwrap();
            prop_assert_eq!(report.tokens_in, tokens.len() as u64);
            prop_assert_eq!(report.tokens_privatized + report.tokens_oov, report.tokens_in);
            prop_assert_eq!(out.len() as u64, report.tokens_in); // pass-through keeps length
            prop_assert!((0.0..=1.0).contains(&report.unchanged_fraction));
        }
    }
}
