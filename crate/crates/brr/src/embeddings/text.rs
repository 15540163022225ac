//! Text embedding parsing: one `word v1 v2 ... vn` line per word.

use std::io::BufRead;

use super::{RealEmbeddingMatrix, Vocabulary};
use crate::error::{Error, Result};

/// Parse a line-oriented embedding stream.
///
/// The first non-empty line fixes the dimension; vocabulary order follows
/// file order. Values must parse as finite `f32`. Line numbers in errors are
/// 1-based over the raw stream; `column` is the 1-based index of the value
/// within its line (the word itself is column 0).
pub fn load_text_embeddings<R: BufRead>(reader: R) -> Result<(Vocabulary, RealEmbeddingMatrix)> {
    let mut words = Vec::new();
    let mut data: Vec<f32> = Vec::new();
    let mut dim: Option<usize> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_ascii_whitespace();
        let word = fields.next().expect("non-empty line has a first field");

        let start = data.len();
        for (col, field) in fields.enumerate() {
            match field.parse::<f32>() {
                Ok(v) if v.is_finite() => data.push(v),
                _ => {
                    return Err(Error::UnparsableNumber {
                        line: line_no,
                        column: col + 1,
                    })
                }
            }
        }
        let found = data.len() - start;
        match dim {
            None => {
                if found == 0 {
                    return Err(Error::InconsistentDimension {
                        line: line_no,
                        expected: 1,
                        found: 0,
                    });
                }
                dim = Some(found);
            }
            Some(expected) if expected != found => {
                return Err(Error::InconsistentDimension {
                    line: line_no,
                    expected,
                    found,
                });
            }
            Some(_) => {}
        }
        words.push(word.to_owned());
    }

    let dim = dim.ok_or(Error::EmptyMatrix)?;
    let vocab = Vocabulary::new(words)?;
    let matrix = RealEmbeddingMatrix::from_data(dim, data)?;
    Ok((vocab, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn parses_two_line_file() {
        let (vocab, m) = load_text_embeddings(Cursor::new("a 1.0 0.0\nb 0.0 1.0")).unwrap();
        assert_eq!(vocab.words(), ["a", "b"]);
        assert_eq!(m.dim(), 2);
        assert_eq!(m.row(0), [1.0, 0.0]);
        assert_eq!(m.row(1), [0.0, 1.0]);
    }

    #[test]
    fn reports_inconsistent_dimension_with_line() {
        let err = load_text_embeddings(Cursor::new("a 1.0\nb 2.0 3.0")).unwrap_err();
        assert!(matches!(
            err,
            Error::InconsistentDimension {
                line: 2,
                expected: 1,
                found: 2
            }
        ));
    }

    #[test]
    fn infers_dim_from_first_line() {
        let mut text = String::new();
        for w in ["alpha", "beta"] {
            text.push_str(w);
            for i in 0..300 {
                text.push_str(&format!(" {}.5", i));
            }
            text.push('\n');
        }
        let (_, m) = load_text_embeddings(Cursor::new(text)).unwrap();
        assert_eq!(m.dim(), 300);
    }

    #[test]
    fn rejects_duplicate_words() {
        let err = load_text_embeddings(Cursor::new("a 1.0\na 2.0")).unwrap_err();
        assert!(matches!(err, Error::DuplicateWord(w) if w == "a"));
    }

    #[test]
    fn reports_bad_number_position() {
        let err = load_text_embeddings(Cursor::new("a 1.0 2.0\nb 3.0 oops")).unwrap_err();
        assert!(matches!(
            err,
            Error::UnparsableNumber { line: 2, column: 2 }
        ));
        let err = load_text_embeddings(Cursor::new("a 1.0 inf")).unwrap_err();
        assert!(matches!(
            err,
            Error::UnparsableNumber { line: 1, column: 2 }
        ));
    }

    #[test]
    fn skips_blank_lines_and_keeps_line_numbers() {
        let (vocab, _) = load_text_embeddings(Cursor::new("a 1.0\n\nb 2.0\n")).unwrap();
        assert_eq!(vocab.words(), ["a", "b"]);
        let err = load_text_embeddings(Cursor::new("a 1.0\n\nb 2.0 3.0")).unwrap_err();
        assert!(matches!(err, Error::InconsistentDimension { line: 3, .. }));
    }

    #[test]
    fn empty_stream_is_an_error() {
        assert!(matches!(
            load_text_embeddings(Cursor::new("")),
            Err(Error::EmptyMatrix)
        ));
    }
}
