//! Mechanistic decomposition of mean-pooled sentence embeddings.
//!
//! The crate is organised around the analysis pipeline:
//!
//! - [`corpus`]: token-aligned embedding corpora, on-disk format, splits and
//!   synthetic corpora with known ground truth.
//! - [`numkit`]: the small dense kernel shared by the trainers (SVD, Adam,
//!   cross-entropy, finite-difference gradient checks).
//! - [`probes`]: linear and MLP probes over token embeddings, baselines and
//!   the probe-weight / singular-vector alignment.
//! - [`dictlearn`]: supervised sparse dictionary learning over token
//!   embeddings, hyperparameter sweeps and atom analytics.
//! - [`attribution`]: pooled codes, atom contributions to the pooled sentence
//!   vector and their aggregation into linguistic classes.

pub mod attribution;
pub mod corpus;
pub mod dictlearn;
pub mod metrics;
pub mod numkit;
pub mod params;
pub mod probes;
pub mod table;
pub mod tensor_io;

pub use attribution::{AttributionReport, ClassAttribution, PooledSentence};
pub use corpus::{Corpus, GroundTruth, SplitSpec, SyntheticSpec, TokenRecord};
pub use dictlearn::{DictConfig, DictModel, Nonlinearity, SparseCode, TrainHistory};
pub use probes::{ProbeArch, ProbeMetrics, ProbeModel, ProbeTarget};

/// Which label table a class-level analysis reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Pos,
    Dep,
}

impl LabelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelKind::Pos => "pos",
            LabelKind::Dep => "dep",
        }
    }
}

impl std::fmt::Display for LabelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LabelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pos" => Ok(LabelKind::Pos),
            "dep" => Ok(LabelKind::Dep),
            other => Err(format!("unknown label kind `{other}` (expected pos or dep)")),
        }
    }
}
