//! Vocabulary, real-valued embedding rows and bit-packed binary codes.
//!
//! Binary codes pack bit `i` into machine word `i / 64` at position `i % 64`
//! (least-significant bit first). Padding bits beyond `bits - 1` are always
//! zero; every constructor and operation in this crate maintains that
//! invariant, so whole-word XOR and popcount never see stray bits.

mod binarize;
mod format;
mod text;

pub use binarize::{binarize_hyperplane, binarize_median};
pub use format::{read_bemb, write_bemb, BEMB_MAGIC, BEMB_VERSION};
pub use text::load_text_embeddings;

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Ordered set of distinct words with dense 0-based ids.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    /// Build from an ordered word list. Duplicates are an error.
    pub fn new(words: Vec<String>) -> Result<Self> {
        let mut ids = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if ids.insert(w.clone(), i as u32).is_some() {
                return Err(Error::DuplicateWord(w.clone()));
            }
        }
        Ok(Self { words, ids })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    /// Exact byte-for-byte lookup; no normalization.
    pub fn id(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Dense `count x dim` matrix of finite `f32` values, one row per word id.
#[derive(Debug, Clone)]
pub struct RealEmbeddingMatrix {
    dim: usize,
    data: Vec<f32>,
}

impl RealEmbeddingMatrix {
    /// Build from row-major data. `data.len()` must be a multiple of `dim`
    /// and every value finite.
    pub fn from_data(dim: usize, data: Vec<f32>) -> Result<Self> {
        assert!(dim > 0, "dimension must be positive");
        assert_eq!(data.len() % dim, 0, "row-major data length must be count*dim");
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::UnparsableNumber {
                line: pos / dim + 1,
                column: pos % dim + 1,
            });
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Number of 64-bit words needed for `bits` packed bits.
pub(crate) fn words_per_code(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// Mask selecting the data bits of the last word of a code.
pub(crate) fn last_word_mask(bits: usize) -> u64 {
    match bits % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// One owned bit-packed code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Code {
    bits: usize,
    words: Vec<u64>,
}

impl Code {
    /// All-zero code of the given width.
    pub fn zero(bits: usize) -> Self {
        assert!(bits > 0, "bit width must be positive");
        Self {
            bits,
            words: vec![0; words_per_code(bits)],
        }
    }

    /// Code of up to 64 bits from an integer value (bit `i` of `value`
    /// becomes bit `i` of the code).
    pub fn from_value(bits: usize, value: u64) -> Self {
        assert!((1..=64).contains(&bits));
        assert_eq!(value & !last_word_mask(bits), 0, "value wider than bits");
        Self {
            bits,
            words: vec![value],
        }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn as_ref(&self) -> CodeRef<'_> {
        CodeRef {
            bits: self.bits,
            words: &self.words,
        }
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.bits);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set_bit(&mut self, i: usize) {
        assert!(i < self.bits);
        self.words[i / 64] |= 1 << (i % 64);
    }

    /// XOR another equal-width code into this one. Padding stays zero
    /// because it is zero on both sides.
    pub fn xor_assign(&mut self, other: CodeRef<'_>) -> Result<()> {
        if self.bits != other.bits {
            return Err(Error::BitWidthMismatch {
                left: self.bits,
                right: other.bits,
            });
        }
        for (w, o) in self.words.iter_mut().zip(other.words) {
            *w ^= o;
        }
        Ok(())
    }
}

/// Borrowed view of one packed code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeRef<'a> {
    bits: usize,
    words: &'a [u64],
}

impl<'a> CodeRef<'a> {
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn words(&self) -> &'a [u64] {
        self.words
    }

    pub fn to_owned(&self) -> Code {
        Code {
            bits: self.bits,
            words: self.words.to_vec(),
        }
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.bits);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// Extract `width <= 64` bits starting at bit `start` as an integer.
    pub(crate) fn chunk(&self, start: usize, width: usize) -> u64 {
        debug_assert!((1..=64).contains(&width));
        debug_assert!(start + width <= self.bits);
        let word = start / 64;
        let off = start % 64;
        let mut v = self.words[word] >> off;
        if off + width > 64 {
            v |= self.words[word + 1] << (64 - off);
        }
        if width < 64 {
            v &= (1u64 << width) - 1;
        }
        v
    }
}

/// Hamming distance between two equal-width codes.
pub fn hamming(a: CodeRef<'_>, b: CodeRef<'_>) -> Result<u32> {
    if a.bits != b.bits {
        return Err(Error::BitWidthMismatch {
            left: a.bits,
            right: b.bits,
        });
    }
    Ok(hamming_words(a.words, b.words))
}

/// Distance between packed slices of equal length; padding must be zero.
#[inline]
pub(crate) fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// Bit-packed codes of fixed width, one row per word id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCodeMatrix {
    bits: usize,
    wpc: usize,
    data: Vec<u64>,
}

impl BinaryCodeMatrix {
    /// All-zero matrix with `count` rows of `bits` bits.
    pub fn zeroed(bits: usize, count: usize) -> Self {
        assert!(bits > 0, "bit width must be positive");
        let wpc = words_per_code(bits);
        Self {
            bits,
            wpc,
            data: vec![0; wpc * count],
        }
    }

    /// Build from raw packed words; rejects nonzero padding bits.
    pub fn from_words(bits: usize, count: usize, data: Vec<u64>) -> Result<Self> {
        let wpc = words_per_code(bits);
        if data.len() != wpc * count {
            return Err(Error::Format(format!(
                "expected {} packed words, got {}",
                wpc * count,
                data.len()
            )));
        }
        let mask = last_word_mask(bits);
        for row in 0..count {
            if data[row * wpc + wpc - 1] & !mask != 0 {
                return Err(Error::Format(format!("nonzero padding bits in row {row}")));
            }
        }
        Ok(Self { bits, wpc, data })
    }

    pub fn from_codes(codes: &[Code]) -> Result<Self> {
        let bits = codes.first().map(Code::bits).ok_or(Error::EmptyMatrix)?;
        let mut data = Vec::with_capacity(words_per_code(bits) * codes.len());
        for c in codes {
            if c.bits != bits {
                return Err(Error::BitWidthMismatch {
                    left: bits,
                    right: c.bits,
                });
            }
            data.extend_from_slice(&c.words);
        }
        Self::from_words(bits, codes.len(), data)
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn words_per_code(&self) -> usize {
        self.wpc
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.wpc).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn code(&self, i: usize) -> CodeRef<'_> {
        CodeRef {
            bits: self.bits,
            words: &self.data[i * self.wpc..(i + 1) * self.wpc],
        }
    }

    pub(crate) fn code_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.wpc..(i + 1) * self.wpc]
    }

    pub fn raw_words(&self) -> &[u64] {
        &self.data
    }

    pub(crate) fn set_bit(&mut self, row: usize, bit: usize) {
        debug_assert!(bit < self.bits);
        self.data[row * self.wpc + bit / 64] |= 1 << (bit % 64);
    }

    pub fn iter(&self) -> impl Iterator<Item = CodeRef<'_>> {
        (0..self.len()).map(|i| self.code(i))
    }
}
