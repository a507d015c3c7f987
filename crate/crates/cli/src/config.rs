//! Pipeline configuration file (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sentdecomp_core::attribution::NormalizationOrder;
use sentdecomp_core::dictlearn::SearchSpace;
use sentdecomp_core::probes::{ProbeArch, ProbeHyper, ProbeTarget};
use sentdecomp_core::{DictConfig, LabelKind, SyntheticSpec};

use crate::error::CliError;

/// Environment variable overriding `output_dir`.
pub const ENV_OUTPUT_DIR: &str = "SENTDECOMP_OUTPUT_DIR";
/// Environment variable overriding `seed`.
pub const ENV_SEED: &str = "SENTDECOMP_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus_path: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Which trained model the analysis stages read.
    #[serde(default)]
    pub model_source: ModelSource,
    #[serde(default)]
    pub split: SplitFractions,
    pub synth: Option<SyntheticSpec>,
    pub probe: Option<ProbeSection>,
    pub dict: Option<DictConfig>,
    pub sweep: Option<SweepSection>,
    pub attribution: Option<AttributionSection>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSource {
    #[default]
    Dict,
    Sweep,
}

/// Sentence-level split proportions; the split seed derives from the root seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitFractions {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train_frac: 0.8,
            val_frac: 0.1,
            test_frac: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub targets: Vec<ProbeTarget>,
    pub archs: Vec<ProbeArch>,
    /// Also run shuffled-label probes and the uniform random baseline.
    pub baselines: bool,
    pub hyper: ProbeHyper,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            targets: vec![ProbeTarget::Pos, ProbeTarget::Dep, ProbeTarget::Position],
            archs: vec![ProbeArch::Linear, ProbeArch::Mlp],
            baselines: true,
            hyper: ProbeHyper::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub n_trials: usize,
    pub search_space: SearchSpace,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            n_trials: 10,
            search_space: SearchSpace::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributionSection {
    pub kinds: Vec<LabelKind>,
    pub order: NormalizationOrder,
}

impl Default for AttributionSection {
    fn default() -> Self {
        Self {
            kinds: vec![LabelKind::Pos, LabelKind::Dep],
            order: NormalizationOrder::default(),
        }
    }
}

/// Values that take precedence over the file, typically from flags or the
/// environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads the file, resolves relative paths against its directory and
    /// applies `overrides`.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.corpus_path.is_relative() {
            cfg.corpus_path = base.join(&cfg.corpus_path);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(dir) = &overrides.output_dir {
            self.output_dir = dir.clone();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let err = |m: String| Err(CliError::Config(m));
        if let Some(d) = &self.dict {
            d.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(s) = &self.sweep {
            s.search_space.validate().map_err(|e| CliError::Config(e.to_string()))?;
            if s.n_trials == 0 {
                return err("sweep.n_trials must be at least 1".into());
            }
        }
        if let Some(p) = &self.probe {
            if p.targets.is_empty() || p.archs.is_empty() {
                return err("probe.targets and probe.archs must not be empty".into());
            }
            if p.hyper.batch_size == 0 || p.hyper.max_epochs == 0 || !(p.hyper.lr > 0.0 && p.hyper.lr.is_finite()) {
                return err("probe.hyper needs positive batch_size, max_epochs and lr".into());
            }
        }
        if let Some(a) = &self.attribution {
            if a.kinds.is_empty() {
                return err("attribution.kinds must not be empty".into());
            }
        }
        self.split_spec(0)
            .counts(10)
            .map_err(|e| CliError::Config(format!("split: {e}")))?;
        Ok(())
    }

    pub fn split_spec(&self, seed: u64) -> sentdecomp_core::SplitSpec {
        sentdecomp_core::SplitSpec {
            train_frac: self.split.train_frac,
            val_frac: self.split.val_frac,
            test_frac: self.split.test_frac,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "corpus_path = \"c\"\noutput_dir = \"o\"\nseed = 3\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = PipelineConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.model_source, ModelSource::Dict);
        assert!(cfg.probe.is_none() && cfg.dict.is_none());
        cfg.validate().unwrap();
    }

    #[test]
    fn sections_parse_with_partial_fields() {
        let text = format!(
            "{MINIMAL}[probe]\ntargets = [\"pos\"]\n[probe.hyper]\nmax_epochs = 3\n[dict]\nk = 16\nnonlinearity = \"relu\"\n[sweep]\nn_trials = 2\n[sweep.search_space]\nk = [8]\n[attribution]\norder = \"normalize_then_average\"\n"
        );
        let cfg = PipelineConfig::from_toml(&text).unwrap();
        let p = cfg.probe.as_ref().unwrap();
        assert_eq!(p.targets, vec![ProbeTarget::Pos]);
        assert_eq!(p.hyper.max_epochs, 3);
        assert_eq!(p.hyper.batch_size, 128);
        assert_eq!(cfg.dict.as_ref().unwrap().k, 16);
        assert_eq!(cfg.sweep.as_ref().unwrap().search_space.k, vec![8]);
        assert_eq!(cfg.attribution.unwrap().order, NormalizationOrder::NormalizeThenAverage);
    }

    #[test]
    fn schema_violations_are_config_errors() {
        for text in [
            "output_dir = \"o\"\nseed = 1\n".to_string(),
            format!("{MINIMAL}unknown_key = 1\n"),
            format!("{MINIMAL}[dict]\nk = 0\n"),
            format!("{MINIMAL}[dict]\nlearning_rate = 0.1\n"),
            format!("{MINIMAL}[split]\ntrain_frac = 0.0\n"),
            "corpus_path = \"c\"\noutput_dir = \"o\"\nseed = -1\n".to_string(),
        ] {
            let res = PipelineConfig::from_toml(&text).and_then(|c| c.validate());
            assert!(matches!(res, Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn overrides_replace_seed_and_output_only() {
        let mut cfg = PipelineConfig::from_toml(MINIMAL).unwrap();
        cfg.apply(&Overrides { seed: Some(9), output_dir: Some("elsewhere".into()) });
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
        assert_eq!(cfg.corpus_path, PathBuf::from("c"));
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("pipeline.toml");
        std::fs::write(&path, MINIMAL).unwrap();
        let cfg = PipelineConfig::load(&path, &Overrides::default()).unwrap();
        assert_eq!(cfg.corpus_path, tmp.path().join("c"));
        assert_eq!(cfg.output_dir, tmp.path().join("o"));
    }
}
