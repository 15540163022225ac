//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by embedding parsing, privatization and auditing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: expected {expected} values, found {found}")]
    InconsistentDimension {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("duplicate word {0:?}")]
    DuplicateWord(String),

    #[error("line {line}, value {column}: not a finite number")]
    UnparsableNumber { line: usize, column: usize },

    #[error("embedding matrix has no rows")]
    EmptyMatrix,

    #[error("bit width mismatch: {left} vs {right}")]
    BitWidthMismatch { left: usize, right: usize },

    #[error("epsilon must be positive and finite, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("code space too large to enumerate: {bits} bits exceeds the {max_bits}-bit cap")]
    CodeSpaceTooLarge { bits: usize, max_bits: usize },

    #[error("vocabulary too large to audit: {words} words exceeds the {max_words}-word cap")]
    VocabTooLarge { words: usize, max_words: usize },

    #[error("index must contain at least one entry")]
    EmptyIndex,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("word {0:?} is not in the vocabulary")]
    OutOfVocabulary(String),

    #[error("input must not be empty")]
    EmptyInput,

    #[error("target space has zero aggregate distance; privacy ratio is undefined")]
    DegenerateTargetSpace,

    #[error("vocabulary size {vocab} does not match {what} row count {rows}")]
    VocabMismatch {
        vocab: usize,
        what: &'static str,
        rows: usize,
    },

    #[error("latency measurement needs a non-empty word sample and at least one repetition")]
    EmptySample,

    #[error("mechanism {kind} requires the {required} metric, got {got}")]
    MetricMismatch {
        kind: &'static str,
        required: &'static str,
        got: &'static str,
    },

    #[error("word of {0} bytes exceeds the 65535-byte limit of the embedding file format")]
    WordTooLong(usize),

    #[error("malformed embedding file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
