use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{DictModel, ModelDims, BLOCK_NAMES};
use super::{DictConfig, DictError};
use crate::tensor_io::{f32_from_le_bytes, write_f64_as_f32};

pub const MODEL_FILE: &str = "model.json";
const ARTIFACT_VERSION: u32 = 1;

/// SHA-256 over the vocabulary joined by newlines, hex encoded.
pub fn vocab_hash(vocab: &[String]) -> String {
    hex::encode(Sha256::digest(vocab.join("\n").as_bytes()))
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelManifest {
    version: u32,
    config: DictConfig,
    dims: ModelDims,
    pos_vocab_hash: String,
    dep_vocab_hash: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DictError + '_ {
    move |source| DictError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `model.json` plus one float32 blob per parameter block.
pub fn save_model(model: &DictModel, config: &DictConfig, dir: &Path) -> Result<(), DictError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let manifest = ModelManifest {
        version: ARTIFACT_VERSION,
        config: config.clone(),
        dims: model.dims(),
        pos_vocab_hash: model.pos_vocab_hash.clone(),
        dep_vocab_hash: model.dep_vocab_hash.clone(),
    };
    let path = dir.join(MODEL_FILE);
    let mut json = serde_json::to_string_pretty(&manifest).map_err(|e| DictError::Artifact(e.to_string()))?;
    json.push('\n');
    fs::write(&path, json).map_err(io_err(&path))?;
    let layout = model.layout();
    for (i, name) in BLOCK_NAMES.iter().enumerate() {
        let path = dir.join(format!("{name}.f32"));
        write_f64_as_f32(&path, layout.slice(model.params(), i)).map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn load_model(dir: &Path) -> Result<(DictModel, DictConfig), DictError> {
    let path = dir.join(MODEL_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: ModelManifest =
        serde_json::from_str(&text).map_err(|e| DictError::Artifact(format!("{}: {e}", path.display())))?;
    if manifest.version != ARTIFACT_VERSION {
        return Err(DictError::Artifact(format!("unsupported model version {}", manifest.version)));
    }
    manifest.config.validate()?;
    if manifest.config.k != manifest.dims.k {
        return Err(DictError::Artifact("config k disagrees with dims".into()));
    }
    let mut model = DictModel::zeros(manifest.dims, manifest.config.nonlinearity, manifest.config.topk);
    model.encoder_bias = manifest.config.encoder_bias;
    model.pos_vocab_hash = manifest.pos_vocab_hash;
    model.dep_vocab_hash = manifest.dep_vocab_hash;
    let mut params = Vec::with_capacity(model.params().len());
    for (i, name) in BLOCK_NAMES.iter().enumerate() {
        let path = dir.join(format!("{name}.f32"));
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let expected = model.layout().block(i).len();
        let values = f32_from_le_bytes(&bytes)
            .filter(|v| v.len() == expected)
            .ok_or_else(|| DictError::Artifact(format!("{name}.f32: expected {expected} floats, found {} bytes", bytes.len())))?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DictError::Artifact(format!("{name}.f32 contains non-finite values")));
        }
        params.extend(values.into_iter().map(f64::from));
    }
    model.set_params(params)?;
    Ok((model, manifest.config))
}
