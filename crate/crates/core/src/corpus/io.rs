//! Version-1 corpus directory format.
//!
//! ```text
//! manifest.json    version, model_name, dims, counts, vocabularies (+ extra keys)
//! tokens.tsv       sentence_id  position  word  pos_id  dep_id   (header row first)
//! contextual.f32   num_tokens × dim_contextual, little-endian f32, row-major
//! static.f32       num_tokens × dim_static, same encoding
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Corpus, CorpusError, TokenRecord, FORMAT_VERSION};
use crate::tensor_io::{f32_from_le_bytes, write_f32_matrix};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOKENS_FILE: &str = "tokens.tsv";
pub const CONTEXTUAL_FILE: &str = "contextual.f32";
pub const STATIC_FILE: &str = "static.f32";

const TOKENS_HEADER: &str = "sentence_id\tposition\tword\tpos_id\tdep_id";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    model_name: String,
    dim_contextual: usize,
    dim_static: usize,
    num_tokens: usize,
    num_sentences: usize,
    pos_vocab: Vec<String>,
    dep_vocab: Vec<String>,
    #[serde(flatten)]
    extras: Map<String, Value>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_required(dir: &Path, name: &str) -> Result<Vec<u8>, CorpusError> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(CorpusError::MissingFile(path));
    }
    fs::read(&path).map_err(io_err(&path))
}

pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let dir = dir.as_ref();
    let manifest_bytes = read_required(dir, MANIFEST_FILE)?;
    let manifest: Manifest =
        serde_json::from_slice(&manifest_bytes).map_err(|e| CorpusError::Manifest(e.to_string()))?;
    if manifest.version != FORMAT_VERSION {
        return Err(CorpusError::Manifest(format!(
            "unsupported version {} (expected {FORMAT_VERSION})",
            manifest.version
        )));
    }

    let tokens_bytes = read_required(dir, TOKENS_FILE)?;
    let tokens_text = String::from_utf8(tokens_bytes).map_err(|_| CorpusError::Tokens {
        line: 0,
        message: "not valid UTF-8".into(),
    })?;
    let tokens = parse_tokens(&tokens_text)?;
    if tokens.len() != manifest.num_tokens {
        return Err(CorpusError::Manifest(format!(
            "manifest num_tokens is {} but tokens table has {} rows",
            manifest.num_tokens,
            tokens.len()
        )));
    }

    let contextual = read_matrix(dir, CONTEXTUAL_FILE, manifest.num_tokens, manifest.dim_contextual)?;
    let static_emb = read_matrix(dir, STATIC_FILE, manifest.num_tokens, manifest.dim_static)?;

    let corpus = Corpus {
        tokens,
        contextual,
        static_emb,
        pos_vocab: manifest.pos_vocab,
        dep_vocab: manifest.dep_vocab,
        model_name: manifest.model_name,
        num_sentences: manifest.num_sentences,
        extras: manifest.extras,
    };
    corpus.validate()?;
    Ok(corpus)
}

fn read_matrix(dir: &Path, name: &str, rows: usize, cols: usize) -> Result<Array2<f32>, CorpusError> {
    let bytes = read_required(dir, name)?;
    let expected = rows * cols * 4;
    if bytes.len() != expected {
        return Err(CorpusError::DimensionMismatch {
            file: name.to_string(),
            expected,
            actual: bytes.len(),
        });
    }
    let values = f32_from_le_bytes(&bytes).expect("length checked above");
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked above"))
}

fn parse_tokens(text: &str) -> Result<Vec<TokenRecord>, CorpusError> {
    let mut tokens = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if i == 0 && line == TOKENS_HEADER {
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(CorpusError::Tokens {
                line: line_no,
                message: format!("expected 5 tab-separated fields, found {}", fields.len()),
            });
        }
        let num = |idx: usize, what: &str| -> Result<usize, CorpusError> {
            fields[idx].parse::<usize>().map_err(|_| CorpusError::Tokens {
                line: line_no,
                message: format!("{what} `{}` is not a non-negative integer", fields[idx]),
            })
        };
        tokens.push(TokenRecord {
            sentence_id: num(0, "sentence_id")?,
            position: num(1, "position")?,
            word: fields[2].to_string(),
            pos_id: num(3, "pos_id")?,
            dep_id: num(4, "dep_id")?,
        });
    }
    Ok(tokens)
}

pub fn save_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<(), CorpusError> {
    let dir = dir.as_ref();
    corpus.validate()?;
    for (row, tok) in corpus.tokens.iter().enumerate() {
        if tok.word.contains(['\t', '\n', '\r']) {
            return Err(CorpusError::Invalid(format!(
                "token {row}: word contains a tab or line break"
            )));
        }
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let manifest = Manifest {
        version: FORMAT_VERSION,
        model_name: corpus.model_name.clone(),
        dim_contextual: corpus.dim(),
        dim_static: corpus.static_dim(),
        num_tokens: corpus.num_tokens(),
        num_sentences: corpus.num_sentences,
        pos_vocab: corpus.pos_vocab.clone(),
        dep_vocab: corpus.dep_vocab.clone(),
        extras: corpus.extras.clone(),
    };
    let mut json = serde_json::to_string_pretty(&manifest).map_err(|e| CorpusError::Manifest(e.to_string()))?;
    json.push('\n');
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, json).map_err(io_err(&path))?;

    let mut tsv = String::with_capacity(corpus.num_tokens() * 24);
    tsv.push_str(TOKENS_HEADER);
    tsv.push('\n');
    for t in &corpus.tokens {
        writeln!(
            tsv,
            "{}\t{}\t{}\t{}\t{}",
            t.sentence_id, t.position, t.word, t.pos_id, t.dep_id
        )
        .expect("writing to a String");
    }
    let path = dir.join(TOKENS_FILE);
    fs::write(&path, tsv).map_err(io_err(&path))?;

    let path = dir.join(CONTEXTUAL_FILE);
    write_f32_matrix(&path, &corpus.contextual).map_err(io_err(&path))?;
    let path = dir.join(STATIC_FILE);
    write_f32_matrix(&path, &corpus.static_emb).map_err(io_err(&path))?;
    Ok(())
}
