//! Token-aligned embedding corpora.
//!
//! A [`Corpus`] holds one row per word token in two embedding matrices
//! (contextual and static), the token's POS / DEP label indices and its
//! sentence membership. Corpora are immutable once loaded.

mod io;
mod split;
mod synthetic;

pub use io::{load_corpus, save_corpus, MANIFEST_FILE, TOKENS_FILE, CONTEXTUAL_FILE, STATIC_FILE};
pub use split::{split_corpus, SplitSpec};
pub use synthetic::{generate_synthetic, GroundTruth, SyntheticSpec};

use std::ops::Range;
use std::path::PathBuf;

use ndarray::{Array2, Axis};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::LabelKind;

pub const FORMAT_VERSION: u32 = 1;

/// Sentence delimiters some tokenizers emit; they never take part in pooling.
const SPECIAL_TOKENS: &[&str] = &["[CLS]", "[SEP]", "[PAD]", "<s>", "</s>", "<pad>"];

pub fn is_special_token(word: &str) -> bool {
    SPECIAL_TOKENS.contains(&word)
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing corpus file {0}")]
    MissingFile(PathBuf),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("{file}: expected {expected} bytes from manifest dimensions, found {actual}")]
    DimensionMismatch {
        file: String,
        expected: usize,
        actual: usize,
    },
    #[error("token {row}: {kind} id {id} out of range for vocabulary of {vocab_len}")]
    LabelOutOfRange {
        row: usize,
        kind: LabelKind,
        id: usize,
        vocab_len: usize,
    },
    #[error("non-finite value in {matrix} at row {row}, column {col}")]
    NonFinite {
        matrix: &'static str,
        row: usize,
        col: usize,
    },
    #[error("tokens table line {line}: {message}")]
    Tokens { line: usize, message: String },
    #[error("invalid corpus: {0}")]
    Invalid(String),
    #[error("invalid split: {0}")]
    Split(String),
    #[error("synthetic corpus: {0}")]
    Synthetic(String),
    #[error("sentence {0} not found")]
    MissingSentence(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenRecord {
    pub sentence_id: usize,
    pub position: usize,
    pub word: String,
    pub pos_id: usize,
    pub dep_id: usize,
}

/// A contiguous run of tokens sharing one `sentence_id`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceSpan {
    pub sentence_id: usize,
    pub rows: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub tokens: Vec<TokenRecord>,
    /// `T × d` contextual embeddings.
    pub contextual: Array2<f32>,
    /// `T × d_s` pre-contextual (input table) embeddings.
    pub static_emb: Array2<f32>,
    pub pos_vocab: Vec<String>,
    pub dep_vocab: Vec<String>,
    pub model_name: String,
    pub num_sentences: usize,
    /// Manifest keys beyond the required set, preserved on round-trip.
    pub extras: Map<String, Value>,
}

impl Corpus {
    pub fn num_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn dim(&self) -> usize {
        self.contextual.ncols()
    }

    pub fn static_dim(&self) -> usize {
        self.static_emb.ncols()
    }

    pub fn vocab(&self, kind: LabelKind) -> &[String] {
        match kind {
            LabelKind::Pos => &self.pos_vocab,
            LabelKind::Dep => &self.dep_vocab,
        }
    }

    pub fn labels(&self, kind: LabelKind) -> Vec<usize> {
        self.tokens
            .iter()
            .map(|t| match kind {
                LabelKind::Pos => t.pos_id,
                LabelKind::Dep => t.dep_id,
            })
            .collect()
    }

    /// Contextual row `t` widened to `f64`.
    pub fn contextual_row(&self, t: usize) -> Vec<f64> {
        self.contextual.row(t).iter().map(|&v| f64::from(v)).collect()
    }

    pub fn static_row(&self, t: usize) -> Vec<f64> {
        self.static_emb.row(t).iter().map(|&v| f64::from(v)).collect()
    }

    /// Sentence spans in row order. Assumes tokens are grouped by sentence.
    pub fn sentences(&self) -> Vec<SentenceSpan> {
        let mut spans: Vec<SentenceSpan> = Vec::new();
        for (row, tok) in self.tokens.iter().enumerate() {
            match spans.last_mut() {
                Some(span) if span.sentence_id == tok.sentence_id => span.rows.end = row + 1,
                _ => spans.push(SentenceSpan {
                    sentence_id: tok.sentence_id,
                    rows: row..row + 1,
                }),
            }
        }
        spans
    }

    pub fn sentence_rows(&self, sentence_id: usize) -> Result<Range<usize>, CorpusError> {
        self.sentences()
            .into_iter()
            .find(|s| s.sentence_id == sentence_id)
            .map(|s| s.rows)
            .ok_or(CorpusError::MissingSentence(sentence_id))
    }

    /// Sub-corpus holding the given sentences in ascending id order.
    /// Sentence ids are kept, not renumbered.
    pub fn select_sentences(&self, sentence_ids: &[usize]) -> Corpus {
        let mut wanted: Vec<usize> = sentence_ids.to_vec();
        wanted.sort_unstable();
        wanted.dedup();
        let spans = self.sentences();
        let mut rows = Vec::new();
        for span in spans.iter().filter(|s| wanted.binary_search(&s.sentence_id).is_ok()) {
            rows.extend(span.rows.clone());
        }
        // spans are in ascending sentence order for validated corpora
        Corpus {
            tokens: rows.iter().map(|&r| self.tokens[r].clone()).collect(),
            contextual: self.contextual.select(Axis(0), &rows),
            static_emb: self.static_emb.select(Axis(0), &rows),
            pos_vocab: self.pos_vocab.clone(),
            dep_vocab: self.dep_vocab.clone(),
            model_name: self.model_name.clone(),
            num_sentences: spans
                .iter()
                .filter(|s| wanted.binary_search(&s.sentence_id).is_ok())
                .count(),
            extras: self.extras.clone(),
        }
    }

    /// Checks every structural invariant of the format.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let t = self.tokens.len();
        if self.contextual.nrows() != t || self.static_emb.nrows() != t {
            return Err(CorpusError::Invalid(format!(
                "row counts disagree: {} tokens, {} contextual rows, {} static rows",
                t,
                self.contextual.nrows(),
                self.static_emb.nrows()
            )));
        }
        for (row, tok) in self.tokens.iter().enumerate() {
            if tok.word.is_empty() {
                return Err(CorpusError::Invalid(format!("token {row} has an empty word")));
            }
            if tok.pos_id >= self.pos_vocab.len() {
                return Err(CorpusError::LabelOutOfRange {
                    row,
                    kind: LabelKind::Pos,
                    id: tok.pos_id,
                    vocab_len: self.pos_vocab.len(),
                });
            }
            if tok.dep_id >= self.dep_vocab.len() {
                return Err(CorpusError::LabelOutOfRange {
                    row,
                    kind: LabelKind::Dep,
                    id: tok.dep_id,
                    vocab_len: self.dep_vocab.len(),
                });
            }
        }
        let mut prev: Option<(usize, usize)> = None;
        let mut n_sent = 0;
        for (row, tok) in self.tokens.iter().enumerate() {
            let expected_pos = match prev {
                Some((sid, pos)) if sid == tok.sentence_id => pos + 1,
                Some((sid, _)) if tok.sentence_id < sid => {
                    return Err(CorpusError::Invalid(format!(
                        "token {row}: sentence ids not sorted ({} after {sid})",
                        tok.sentence_id
                    )));
                }
                _ => {
                    n_sent += 1;
                    0
                }
            };
            if tok.position != expected_pos {
                return Err(CorpusError::Invalid(format!(
                    "token {row}: sentence {} has position {} where {} was expected",
                    tok.sentence_id, tok.position, expected_pos
                )));
            }
            prev = Some((tok.sentence_id, tok.position));
        }
        if n_sent != self.num_sentences {
            return Err(CorpusError::Invalid(format!(
                "num_sentences is {} but tokens span {} sentences",
                self.num_sentences, n_sent
            )));
        }
        check_finite("contextual", &self.contextual)?;
        check_finite("static", &self.static_emb)?;
        Ok(())
    }
}

fn check_finite(matrix: &'static str, m: &Array2<f32>) -> Result<(), CorpusError> {
    for ((row, col), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(CorpusError::NonFinite { matrix, row, col });
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Three sentences of lengths 5, 4 and 3 with `d = 8`, `d_s = 4`.
    pub fn small_corpus() -> Corpus {
        let lengths = [5usize, 4, 3];
        let mut tokens = Vec::new();
        for (sid, &len) in lengths.iter().enumerate() {
            for p in 0..len {
                tokens.push(TokenRecord {
                    sentence_id: sid,
                    position: p,
                    word: format!("w{sid}_{p}"),
                    pos_id: (sid + p) % 3,
                    dep_id: p % 2,
                });
            }
        }
        let t = tokens.len();
        Corpus {
            tokens,
            contextual: Array2::from_shape_fn((t, 8), |(i, j)| (i as f32) * 0.25 - (j as f32) * 0.125),
            static_emb: Array2::from_shape_fn((t, 4), |(i, j)| ((i * 7 + j) % 5) as f32 - 2.0),
            pos_vocab: vec!["NOUN".into(), "VERB".into(), "ADJ".into()],
            dep_vocab: vec!["nsubj".into(), "root".into()],
            model_name: "fixture".into(),
            num_sentences: 3,
            extras: Map::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::small_corpus;
    use super::*;

    #[test]
    fn fixture_is_valid() {
        let c = small_corpus();
        c.validate().unwrap();
        assert_eq!(c.num_tokens(), 12);
        assert_eq!(c.dim(), 8);
        let spans = c.sentences();
        assert_eq!(spans.len(), 3);
        assert_eq!(spans[1].rows, 5..9);
    }

    #[test]
    fn position_gap_is_rejected() {
        let mut c = small_corpus();
        c.tokens[2].position = 3;
        assert!(matches!(c.validate(), Err(CorpusError::Invalid(_))));
    }

    #[test]
    fn label_out_of_range_is_rejected() {
        let mut c = small_corpus();
        c.tokens[4].dep_id = 2;
        assert!(matches!(
            c.validate(),
            Err(CorpusError::LabelOutOfRange { kind: LabelKind::Dep, id: 2, .. })
        ));
    }

    #[test]
    fn nan_is_rejected() {
        let mut c = small_corpus();
        c.static_emb[[3, 1]] = f32::NAN;
        assert!(matches!(
            c.validate(),
            Err(CorpusError::NonFinite { matrix: "static", row: 3, col: 1 })
        ));
    }

    #[test]
    fn select_keeps_ids_and_rows() {
        let c = small_corpus();
        let sub = c.select_sentences(&[2, 0]);
        sub.validate().unwrap();
        assert_eq!(sub.num_sentences, 2);
        assert_eq!(sub.num_tokens(), 8);
        assert_eq!(sub.tokens[5].sentence_id, 2);
        assert_eq!(sub.contextual.row(5), c.contextual.row(9));
    }

    #[test]
    fn special_tokens() {
        assert!(is_special_token("[CLS]"));
        assert!(!is_special_token("cls"));
    }
}
