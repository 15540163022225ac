//! `BEMB`: a small binary container for a vocabulary plus packed codes.
//!
//! Layout, all integers little-endian:
//!
//! | section   | bytes                                          |
//! |-----------|------------------------------------------------|
//! | magic     | `BEMB` (4 bytes)                               |
//! | header    | `u32` version = 1, `u32` word count, `u32` bits |
//! | words     | per word: `u16` byte length, then UTF-8 bytes  |
//! | codes     | per word: `ceil(bits / 64)` `u64` code words   |
//!
//! Reading validates the magic, version, UTF-8, word uniqueness and the
//! zero-padding invariant, and rejects trailing bytes, so a successful read
//! always yields exactly what a write produced.

use std::io::{Read, Write};

use super::{words_per_code, BinaryCodeMatrix, Vocabulary};
use crate::error::{Error, Result};

/// First four bytes of every embedding container file.
pub const BEMB_MAGIC: [u8; 4] = *b"BEMB";

/// Current container format version.
pub const BEMB_VERSION: u32 = 1;

/// Serialize a vocabulary and its codes. Word `i` owns code row `i`.
pub fn write_bemb<W: Write>(
    writer: &mut W,
    vocab: &Vocabulary,
    codes: &BinaryCodeMatrix,
) -> Result<()> {
    if vocab.len() != codes.len() {
        return Err(Error::VocabMismatch {
            vocab: vocab.len(),
            what: "binary code",
            rows: codes.len(),
        });
    }
    writer.write_all(&BEMB_MAGIC)?;
    writer.write_all(&BEMB_VERSION.to_le_bytes())?;
    writer.write_all(&(vocab.len() as u32).to_le_bytes())?;
    writer.write_all(&(codes.bits() as u32).to_le_bytes())?;
    for word in vocab.words() {
        let len = word.len();
        if len > u16::MAX as usize {
            return Err(Error::WordTooLong(len));
        }
        writer.write_all(&(len as u16).to_le_bytes())?;
        writer.write_all(word.as_bytes())?;
    }
    for word in codes.raw_words() {
        writer.write_all(&word.to_le_bytes())?;
    }
    Ok(())
}

/// Deserialize a file produced by [`write_bemb`].
pub fn read_bemb<R: Read>(reader: &mut R) -> Result<(Vocabulary, BinaryCodeMatrix)> {
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic)?;
    if magic != BEMB_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {magic:02x?}, expected {BEMB_MAGIC:02x?}"
        )));
    }
    let version = read_u32(reader)?;
    if version != BEMB_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {BEMB_VERSION}"
        )));
    }
    let count = read_u32(reader)? as usize;
    let bits = read_u32(reader)? as usize;
    if bits == 0 {
        return Err(Error::Format("bit width must be positive".into()));
    }

    let mut words = Vec::new();
    let mut buf = Vec::new();
    for _ in 0..count {
        let mut len = [0u8; 2];
        reader.read_exact(&mut len)?;
        buf.resize(u16::from_le_bytes(len) as usize, 0);
        reader.read_exact(&mut buf)?;
        let word = std::str::from_utf8(&buf)
            .map_err(|e| Error::Format(format!("word is not UTF-8: {e}")))?;
        words.push(word.to_owned());
    }

    let wpc = words_per_code(bits);
    let mut data = Vec::new();
    let mut word = [0u8; 8];
    for _ in 0..count * wpc {
        reader.read_exact(&mut word)?;
        data.push(u64::from_le_bytes(word));
    }
    if reader.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after code section".into()));
    }

    Ok((
        Vocabulary::new(words)?,
        BinaryCodeMatrix::from_words(bits, count, data)?,
    ))
}

fn read_u32<R: Read>(reader: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
