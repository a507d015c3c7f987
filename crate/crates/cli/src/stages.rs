//! One function per pipeline subcommand. Each reads its inputs from the
//! corpus directory or earlier artifacts and writes its own files into the
//! output directory.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use sentdecomp_core::attribution::{
    atom_contributions_csv, atom_stats, atom_stats_csv, class_attribution, class_attribution_csv, corpus_contributions,
};
use sentdecomp_core::corpus::{generate_synthetic, load_corpus, save_corpus, split_corpus};
use sentdecomp_core::dictlearn::{
    atom_label_assignment, atom_orthogonality, atom_pos_deviation, evaluate, load_model, save_model, sweep, sweep_csv,
    train, vocab_hash,
};
use sentdecomp_core::probes::{
    probe_results_csv, probe_svd_alignment, random_baseline, svd_alignment_csv, train_probe, ProbeArch, ProbeMetrics,
    ProbeMode, ProbeResultRow, ProbeTarget,
};
use sentdecomp_core::table::to_csv;
use sentdecomp_core::{Corpus, DictModel, LabelKind};

use crate::config::{ModelSource, PipelineConfig};
use crate::error::CliError;
use crate::derive_seed;

pub const MODEL_DIR: &str = "model";
pub const SWEEP_MODEL_DIR: &str = "sweep_best_model";

pub struct Pipeline {
    pub config: PipelineConfig,
}

fn write(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    std::fs::write(path, text).map_err(CliError::io(path))?;
    Ok(path.to_path_buf())
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable artifact");
    text.push('\n');
    write(path, &text)
}

/// A probe's record plus, for standard linear probes, its class names and
/// singular-vector alignment.
type ProbeOutput = (ProbeRecord, Option<(Vec<String>, ndarray::Array2<f64>)>);

#[derive(Serialize)]
struct ProbeRecord {
    target: ProbeTarget,
    arch: Option<ProbeArch>,
    mode: ProbeMode,
    seed: u64,
    metrics: ProbeMetrics,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        Self { config }
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }

    fn ensure_output(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.config.output_dir).map_err(CliError::io(&self.config.output_dir))
    }

    pub fn seed(&self, stage: &str) -> u64 {
        derive_seed(self.config.seed, stage)
    }

    pub fn corpus(&self) -> Result<Corpus, CliError> {
        let path = &self.config.corpus_path;
        if !path.is_dir() {
            return Err(CliError::MissingArtifact {
                path: path.clone(),
                hint: "corpus directory not found (run `synth` or export a corpus)".into(),
            });
        }
        Ok(load_corpus(path)?)
    }

    fn splits(&self, corpus: &Corpus) -> Result<(Corpus, Corpus, Corpus), CliError> {
        Ok(split_corpus(corpus, &self.config.split_spec(self.seed("split")))?)
    }

    fn model_dir(&self) -> PathBuf {
        match self.config.model_source {
            ModelSource::Dict => self.out(MODEL_DIR),
            ModelSource::Sweep => self.out(SWEEP_MODEL_DIR),
        }
    }

    fn model_for(&self, corpus: &Corpus) -> Result<DictModel, CliError> {
        let dir = self.model_dir();
        if !dir.join(sentdecomp_core::dictlearn::MODEL_FILE).is_file() {
            let stage = match self.config.model_source {
                ModelSource::Dict => "dict-train",
                ModelSource::Sweep => "sweep",
            };
            return Err(CliError::MissingArtifact { path: dir, hint: format!("run `{stage}` first") });
        }
        let (model, _) = load_model(&dir)?;
        if model.pos_vocab_hash != vocab_hash(&corpus.pos_vocab) || model.dep_vocab_hash != vocab_hash(&corpus.dep_vocab) {
            return Err(CliError::InvalidArtifact(format!(
                "model in {} was trained on a different label vocabulary",
                dir.display()
            )));
        }
        Ok(model)
    }

    /// Loads and checks the corpus; prints a description to stdout.
    pub fn validate(&self) -> Result<Vec<PathBuf>, CliError> {
        let corpus = self.corpus()?;
        corpus.validate()?;
        let (tr, va, te) = self.splits(&corpus)?;
        let info = json!({
            "corpus_path": self.config.corpus_path,
            "model_name": corpus.model_name,
            "num_tokens": corpus.num_tokens(),
            "num_sentences": corpus.num_sentences,
            "dim_contextual": corpus.dim(),
            "dim_static": corpus.static_dim(),
            "pos_classes": corpus.pos_vocab.len(),
            "dep_classes": corpus.dep_vocab.len(),
            "split_sentences": [tr.num_sentences, va.num_sentences, te.num_sentences],
        });
        println!("{}", serde_json::to_string_pretty(&info).expect("json"));
        Ok(Vec::new())
    }

    /// Writes a synthetic corpus (with its ground truth) to `corpus_path`.
    pub fn synth(&self) -> Result<Vec<PathBuf>, CliError> {
        let mut spec = self.config.synth.clone().unwrap_or_default();
        spec.seed = self.seed("synth");
        let (corpus, truth) = generate_synthetic(&spec)?;
        let dir = &self.config.corpus_path;
        save_corpus(&corpus, dir)?;
        truth.save(dir).map_err(CliError::io(dir))?;
        Ok(vec![dir.clone()])
    }

    pub fn probe(&self) -> Result<Vec<PathBuf>, CliError> {
        let section = self.config.probe.clone().unwrap_or_default();
        let corpus = self.corpus()?;
        let (tr, va, _) = self.splits(&corpus)?;
        self.ensure_output()?;
        let root = self.seed("probe");

        let mut jobs: Vec<(ProbeTarget, Option<ProbeArch>, ProbeMode)> = Vec::new();
        for &target in &section.targets {
            for &arch in &section.archs {
                jobs.push((target, Some(arch), ProbeMode::Standard));
                if section.baselines {
                    jobs.push((target, Some(arch), ProbeMode::Shuffled));
                }
            }
            if section.baselines {
                jobs.push((target, None, ProbeMode::Random));
            }
        }
        let results: Vec<Result<ProbeOutput, CliError>> = jobs
            .into_par_iter()
            .map(|(target, arch, mode)| {
                let label = format!("{target}/{}/{mode}", arch.map(|a| a.as_str()).unwrap_or("none"));
                let seed = derive_seed(root, &label);
                let (metrics, alignment) = match arch {
                    None => (random_baseline(&va, target, seed)?, None),
                    Some(arch) => {
                        let (model, metrics) = train_probe(&tr, &va, target, arch, &section.hyper, mode, seed)?;
                        let alignment = if arch == ProbeArch::Linear && mode == ProbeMode::Standard {
                            Some((model.classes.clone(), probe_svd_alignment(&model)?))
                        } else {
                            None
                        };
                        (metrics, alignment)
                    }
                };
                Ok((ProbeRecord { target, arch, mode, seed, metrics }, alignment))
            })
            .collect();

        let mut records = Vec::new();
        let mut written = Vec::new();
        for r in results {
            let (record, alignment) = r?;
            if let Some((classes, matrix)) = alignment {
                let name = match record.target {
                    ProbeTarget::Pos => "svd_alignment.csv".to_string(),
                    other => format!("svd_alignment_{other}.csv"),
                };
                written.push(write(&self.out(&name), &svd_alignment_csv(&classes, &matrix))?);
            }
            records.push(record);
        }
        let rows: Vec<ProbeResultRow> = records
            .iter()
            .map(|r| ProbeResultRow {
                model_name: corpus.model_name.clone(),
                target: r.target,
                arch: r.arch,
                mode: r.mode,
                accuracy: r.metrics.accuracy,
                macro_f1: r.metrics.macro_f1,
                seed: r.seed,
            })
            .collect();
        written.push(write(&self.out("probe_results.csv"), &probe_results_csv(&rows))?);
        written.push(write_json(&self.out("probe_metrics.json"), &records)?);
        Ok(written)
    }

    pub fn dict_train(&self) -> Result<Vec<PathBuf>, CliError> {
        let mut config = self
            .config
            .dict
            .clone()
            .ok_or_else(|| CliError::Config("dict-train needs a [dict] section".into()))?;
        config.seed = self.seed("dict-train");
        let corpus = self.corpus()?;
        let (tr, va, te) = self.splits(&corpus)?;
        self.ensure_output()?;
        let (model, history) = train(&tr, &va, &config)?;
        let model_dir = self.out(MODEL_DIR);
        save_model(&model, &config, &model_dir)?;
        let val = evaluate(&model, &va)?;
        let test = if te.num_tokens() > 0 { Some(evaluate(&model, &te)?) } else { None };
        let metrics = json!({ "epochs": history.epochs.len(), "val": val, "test": test });
        Ok(vec![
            model_dir,
            write(&self.out("train_history.csv"), &history.to_csv())?,
            write_json(&self.out("dict_metrics.json"), &metrics)?,
        ])
    }

    pub fn sweep(&self) -> Result<Vec<PathBuf>, CliError> {
        let section = self
            .config
            .sweep
            .clone()
            .ok_or_else(|| CliError::Config("sweep needs a [sweep] section".into()))?;
        let corpus = self.corpus()?;
        let (tr, va, _) = self.splits(&corpus)?;
        self.ensure_output()?;
        let outcome = sweep(&tr, &va, &section.search_space, section.n_trials, self.seed("sweep"))?;
        let mut written = vec![
            write(&self.out("sweep.csv"), &sweep_csv(&outcome.rows))?,
            write_json(&self.out("sweep_trials.json"), &outcome.rows)?,
        ];
        match outcome.best {
            Some((index, model)) => {
                let row = &outcome.rows[index];
                let dir = self.out(SWEEP_MODEL_DIR);
                save_model(&model, &row.config, &dir)?;
                written.push(dir);
                written.push(write_json(&self.out("sweep_best.json"), row)?);
            }
            None => {
                return Err(CliError::Numerical(format!("all {} sweep trials failed", outcome.rows.len())));
            }
        }
        Ok(written)
    }

    /// Atom statistics, corpus-level contributions and atom analytics.
    pub fn pool_analyze(&self) -> Result<Vec<PathBuf>, CliError> {
        let corpus = self.corpus()?;
        let model = self.model_for(&corpus)?;
        self.ensure_output()?;
        let order = self.config.attribution.clone().unwrap_or_default().order;
        let stats = atom_stats(&model, &corpus)?;
        let report = corpus_contributions(&model, &corpus, order)?;
        let mut written = vec![
            write(&self.out("atom_stats.csv"), &atom_stats_csv(&stats))?,
            write(&self.out("atom_contributions.csv"), &atom_contributions_csv(&report))?,
        ];
        for kind in [LabelKind::Pos, LabelKind::Dep] {
            let labels = atom_label_assignment(&model, &corpus, kind)?;
            let vocab = corpus.vocab(kind);
            let csv = to_csv(
                &["atom", "label", "confidence", "support"],
                labels.iter().map(|l| {
                    vec![l.atom.to_string(), vocab[l.label].clone(), l.confidence.to_string(), l.support.to_string()]
                }),
            );
            written.push(write(&self.out(&format!("atom_labels_{kind}.csv")), &csv)?);
        }
        let dev = atom_pos_deviation(&model, &corpus)?;
        let csv = to_csv(
            &["atom", "class", "deviation"],
            dev.matrix.indexed_iter().map(|((j, c), v)| vec![j.to_string(), corpus.pos_vocab[c].clone(), v.to_string()]),
        );
        written.push(write(&self.out("pos_deviation.csv"), &csv)?);

        let ortho = atom_orthogonality(&model)?;
        let mut header = vec!["atom".to_string()];
        header.extend((0..model.k()).map(|j| j.to_string()));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let csv = to_csv(
            &header,
            ortho.rows().into_iter().enumerate().map(|(j, row)| {
                let mut r = vec![j.to_string()];
                r.extend(row.iter().map(|v| v.to_string()));
                r
            }),
        );
        written.push(write(&self.out("atom_orthogonality.csv"), &csv)?);

        let absent: Vec<&String> = dev.absent.iter().map(|&c| &corpus.pos_vocab[c]).collect();
        let info = json!({
            "n_sentences": report.n_sentences,
            "skipped_sentences": report.skipped,
            "order": order,
            "degenerate": report.is_degenerate(),
            "absent_pos_classes": absent,
        });
        written.push(write_json(&self.out("pool_analysis.json"), &info)?);
        Ok(written)
    }

    pub fn attribute(&self) -> Result<Vec<PathBuf>, CliError> {
        let section = self.config.attribution.clone().unwrap_or_default();
        let corpus = self.corpus()?;
        let model = self.model_for(&corpus)?;
        self.ensure_output()?;
        let mut written = Vec::new();
        for kind in section.kinds {
            let attr = class_attribution(&model, &corpus, kind, section.order)?;
            written.push(write(&self.out(&format!("class_attribution_{kind}.csv")), &class_attribution_csv(&attr))?);
            let detail = json!({
                "kind": kind,
                "order": section.order,
                "classes": attr.classes,
                "shares": attr.shares,
                "raw_shares": attr.raw_shares,
                "inactive_atoms": attr.inactive_atoms,
            });
            written.push(write_json(&self.out(&format!("class_attribution_{kind}.json")), &detail)?);
        }
        Ok(written)
    }

    pub fn report(&self) -> Result<Vec<PathBuf>, CliError> {
        let summary = crate::report::build_summary(&self.config.output_dir)?;
        Ok(vec![write_json(&self.out(crate::report::SUMMARY_FILE), &summary)?])
    }
}
