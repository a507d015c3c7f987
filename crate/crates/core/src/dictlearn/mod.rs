//! Supervised sparse dictionary learning over token embeddings.
//!
//! Every token embedding `x` is encoded into two sparse codes, a contextual
//! part `z_ctx` and a static part `z_static`. Their sum `z` is decoded by a
//! shared dictionary `D` (`x̂ = D z`) and fed to POS / DEP prediction heads,
//! while `z_static` alone reconstructs the token's static embedding through a
//! second decoder. The training objective is the batch mean of
//!
//! ```text
//! ‖x − x̂‖² + α_pos·CE_pos + α_dep·CE_dep + α_static·‖w − ŵ‖²
//!          + α_sparse·(l1_ctx·‖z_ctx‖₁ + l1_static·‖z_static‖₁)
//! ```

mod analytics;
mod artifact;
mod model;
mod sweep;
mod train;

pub use analytics::{
    atom_label_assignment, atom_orthogonality, atom_pos_deviation, nearest_atoms, AtomLabel,
    PosDeviation, TOP_ACTIVATIONS,
};
pub use artifact::{load_model, save_model, vocab_hash, MODEL_FILE};
pub use model::{DictModel, Forward, LossTerms, ModelDims, SparseCode};
pub use sweep::{
    best_trial, sweep, sweep_csv, write_sweep_csv, SearchSpace, SweepOutcome, TrialRow, SWEEP_COLUMNS,
};
pub use train::{evaluate, train, EpochRecord, EvalMetrics, TrainHistory};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::numkit::NumError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    Identity,
    Relu,
}

impl Nonlinearity {
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Nonlinearity::Identity => v,
            Nonlinearity::Relu => v.max(0.0),
        }
    }

    #[inline]
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Nonlinearity::Identity => 1.0,
            Nonlinearity::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Nonlinearity::Identity => "identity",
            Nonlinearity::Relu => "relu",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DictConfig {
    pub k: usize,
    pub nonlinearity: Nonlinearity,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub alpha_pos: f64,
    pub alpha_dep: f64,
    pub alpha_static: f64,
    pub alpha_sparse: f64,
    pub l1_ctx: f64,
    pub l1_static: f64,
    /// Hard cap on active atoms per token; `None` relies on the L1 terms.
    pub topk: Option<usize>,
    /// When false the encoder biases stay at zero, which makes codes
    /// positively homogeneous in the input.
    pub encoder_bias: bool,
    /// Re-seed dead and duplicated atoms during the first half of training.
    pub resample_atoms: bool,
    pub seed: u64,
}

impl Default for DictConfig {
    fn default() -> Self {
        Self {
            k: 64,
            nonlinearity: Nonlinearity::Identity,
            lr: 1e-3,
            epochs: 30,
            batch_size: 128,
            alpha_pos: 0.5,
            alpha_dep: 0.5,
            alpha_static: 0.5,
            alpha_sparse: 1.0,
            l1_ctx: 1e-3,
            l1_static: 1e-4,
            topk: None,
            encoder_bias: true,
            resample_atoms: true,
            seed: 0,
        }
    }
}

impl DictConfig {
    pub fn validate(&self) -> Result<(), DictError> {
        let bad = |m: String| Err(DictError::Config(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        for (name, v) in [
            ("alpha_pos", self.alpha_pos),
            ("alpha_dep", self.alpha_dep),
            ("alpha_static", self.alpha_static),
            ("alpha_sparse", self.alpha_sparse),
            ("l1_ctx", self.l1_ctx),
            ("l1_static", self.l1_static),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and ≥ 0, got {v}"));
            }
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive".into());
        }
        if let Some(t) = self.topk {
            if t == 0 || t > self.k {
                return bad(format!("topk must be in 1..={}, got {t}", self.k));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DictError {
    #[error("invalid dictionary config: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite {term} loss")]
    NonFinite { term: &'static str },
    #[error("training diverged in epoch {epoch}: non-finite {term} loss")]
    Diverged {
        epoch: usize,
        term: &'static str,
        history: TrainHistory,
    },
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("atom {0} has zero norm")]
    ZeroNormAtom(usize),
    #[error("model vocabulary does not match corpus ({0})")]
    VocabMismatch(String),
    #[error("model artifact: {0}")]
    Artifact(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        DictConfig::default().validate().unwrap();
        for cfg in [
            DictConfig { k: 0, ..Default::default() },
            DictConfig { alpha_dep: -0.1, ..Default::default() },
            DictConfig { l1_ctx: f64::NAN, ..Default::default() },
            DictConfig { topk: Some(65), ..Default::default() },
            DictConfig { topk: Some(0), ..Default::default() },
            DictConfig { lr: 0.0, ..Default::default() },
        ] {
            assert!(matches!(cfg.validate(), Err(DictError::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn relu_derivative_at_kink_is_zero() {
        assert_eq!(Nonlinearity::Relu.derivative(0.0), 0.0);
        assert_eq!(Nonlinearity::Relu.apply(-2.0), 0.0);
        assert_eq!(Nonlinearity::Identity.derivative(-5.0), 1.0);
    }
}
