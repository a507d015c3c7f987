//! Library side of the `sentdecomp` command: configuration, stage runners
//! and the summary report.

pub mod config;
pub mod error;
pub mod report;
pub mod stages;

use std::path::PathBuf;

use sha2::{Digest, Sha256};

pub use config::{Overrides, PipelineConfig};
pub use error::{CliError, InStage, StageError};
pub use stages::Pipeline;

/// Seed for a named stage, derived from the root seed so that stages are
/// independent of each other and of the order they run in.
pub fn derive_seed(root: u64, stage: &str) -> u64 {
    let digest = Sha256::digest(format!("{root}:{stage}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Synth,
    Validate,
    Probe,
    DictTrain,
    Sweep,
    PoolAnalyze,
    Attribute,
    Report,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Validate => "validate",
            Stage::Probe => "probe",
            Stage::DictTrain => "dict-train",
            Stage::Sweep => "sweep",
            Stage::PoolAnalyze => "pool-analyze",
            Stage::Attribute => "attribute",
            Stage::Report => "report",
        }
    }

    /// The module reported in error records.
    pub fn module(self) -> &'static str {
        match self {
            Stage::Synth | Stage::Validate => "corpus-io",
            Stage::Probe => "probes",
            Stage::DictTrain | Stage::Sweep => "dictlearn",
            Stage::PoolAnalyze | Stage::Attribute => "pooling-attribution",
            Stage::Report => "cli",
        }
    }
}

impl Pipeline {
    pub fn run_stage(&self, stage: Stage) -> Result<Vec<PathBuf>, StageError> {
        let result = match stage {
            Stage::Synth => self.synth(),
            Stage::Validate => self.validate(),
            Stage::Probe => self.probe(),
            Stage::DictTrain => self.dict_train(),
            Stage::Sweep => self.sweep(),
            Stage::PoolAnalyze => self.pool_analyze(),
            Stage::Attribute => self.attribute(),
            Stage::Report => self.report(),
        };
        result.stage(stage.module())
    }

    /// Stages `all` runs, in order. Sections absent from the config are
    /// skipped; `synth` only runs when a `[synth]` section is present.
    pub fn plan(&self) -> Vec<Stage> {
        let c = &self.config;
        let mut plan = Vec::new();
        if c.synth.is_some() {
            plan.push(Stage::Synth);
        }
        plan.push(Stage::Validate);
        if c.probe.is_some() {
            plan.push(Stage::Probe);
        }
        if c.dict.is_some() {
            plan.push(Stage::DictTrain);
        }
        if c.sweep.is_some() {
            plan.push(Stage::Sweep);
        }
        let has_model = match c.model_source {
            config::ModelSource::Dict => c.dict.is_some(),
            config::ModelSource::Sweep => c.sweep.is_some(),
        };
        if has_model {
            plan.push(Stage::PoolAnalyze);
            plan.push(Stage::Attribute);
        }
        plan.push(Stage::Report);
        plan
    }

    pub fn run_all(&self) -> Result<Vec<PathBuf>, StageError> {
        let mut written = Vec::new();
        for stage in self.plan() {
            written.extend(self.run_stage(stage)?);
        }
        Ok(written)
    }
}
