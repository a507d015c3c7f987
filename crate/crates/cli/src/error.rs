use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

use sentdecomp_core::attribution::AttributionError;
use sentdecomp_core::corpus::CorpusError;
use sentdecomp_core::dictlearn::DictError;
use sentdecomp_core::probes::ProbeError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing artifact {}: {hint}", path.display())]
    MissingArtifact { path: PathBuf, hint: String },
    #[error("invalid artifact: {0}")]
    InvalidArtifact(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingArtifact { .. } | CliError::InvalidArtifact(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::MissingArtifact { .. } => "missing_artifact",
            CliError::InvalidArtifact(_) => "invalid_artifact",
            CliError::Numerical(_) => "numerical",
            CliError::Io { .. } => "io",
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

/// A failure tagged with the pipeline stage that raised it.
#[derive(Debug, Error)]
#[error("{module}: {source}")]
pub struct StageError {
    pub module: &'static str,
    #[source]
    pub source: CliError,
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> String {
        json!({
            "error": {
                "module": self.module,
                "kind": self.source.kind(),
                "exit_code": self.exit_code(),
                "message": self.source.to_string(),
            }
        })
        .to_string()
    }
}

pub trait InStage<T> {
    fn stage(self, module: &'static str) -> Result<T, StageError>;
}

impl<T, E: Into<CliError>> InStage<T> for Result<T, E> {
    fn stage(self, module: &'static str) -> Result<T, StageError> {
        self.map_err(|e| StageError { module, source: e.into() })
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::MissingFile(path) => CliError::MissingArtifact {
                path,
                hint: "corpus file not found".into(),
            },
            CorpusError::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::MissingArtifact { path, hint: source.to_string() }
            }
            CorpusError::Split(m) => CliError::Config(format!("split: {m}")),
            CorpusError::Synthetic(m) => CliError::Config(format!("synth: {m}")),
            other => CliError::InvalidArtifact(other.to_string()),
        }
    }
}

impl From<DictError> for CliError {
    fn from(e: DictError) -> Self {
        match e {
            DictError::Config(m) => CliError::Config(m),
            DictError::NonFinite { .. } | DictError::Diverged { .. } | DictError::ZeroNormAtom(_) | DictError::Num(_) => {
                CliError::Numerical(e.to_string())
            }
            DictError::Corpus(c) => c.into(),
            DictError::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::MissingArtifact { path, hint: source.to_string() }
            }
            DictError::Io { path, source } => CliError::Io { path, source },
            other => CliError::InvalidArtifact(other.to_string()),
        }
    }
}

impl From<ProbeError> for CliError {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::Diverged(_) | ProbeError::Num(_) => CliError::Numerical(e.to_string()),
            other => CliError::InvalidArtifact(other.to_string()),
        }
    }
}

impl From<AttributionError> for CliError {
    fn from(e: AttributionError) -> Self {
        match e {
            AttributionError::Degenerate(_) => CliError::Numerical(e.to_string()),
            AttributionError::Dict(d) => d.into(),
            other => CliError::InvalidArtifact(other.to_string()),
        }
    }
}
