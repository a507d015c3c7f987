use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::DictModel;
use super::train::{evaluate, train, EvalMetrics};
use super::{DictConfig, DictError, Nonlinearity};
use crate::corpus::Corpus;
use crate::table::to_csv;

pub const SWEEP_COLUMNS: [&str; 8] = ["#", "lr", "k", "nonlinearity", "val_recon", "l1_s_contextual", "f1_pos", "f1_dep"];

/// Ranges sampled by the random search. Pairs are inclusive `(low, high)`;
/// `lr` and the L1 coefficients are drawn log-uniformly, the α weights
/// uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub lr: (f64, f64),
    pub k: Vec<usize>,
    pub nonlinearity: Vec<Nonlinearity>,
    pub alpha_pos: (f64, f64),
    pub alpha_dep: (f64, f64),
    pub alpha_static: (f64, f64),
    pub alpha_sparse: (f64, f64),
    pub l1_ctx: (f64, f64),
    pub l1_static: (f64, f64),
    pub epochs: usize,
    pub batch_size: usize,
    pub topk: Option<usize>,
    pub encoder_bias: bool,
    pub resample_atoms: bool,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            lr: (1e-4, 1e-2),
            k: vec![64, 128, 256, 512],
            nonlinearity: vec![Nonlinearity::Identity, Nonlinearity::Relu],
            alpha_pos: (0.0, 1.0),
            alpha_dep: (0.0, 1.0),
            alpha_static: (0.0, 1.0),
            alpha_sparse: (1.0, 1.0),
            l1_ctx: (1e-5, 1e-2),
            l1_static: (1e-5, 1e-2),
            epochs: 30,
            batch_size: 128,
            topk: None,
            encoder_bias: true,
            resample_atoms: true,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<(), DictError> {
        let bad = |m: String| Err(DictError::Config(format!("search space: {m}")));
        if self.k.is_empty() || self.nonlinearity.is_empty() {
            return bad("k and nonlinearity need at least one choice".into());
        }
        for (name, (lo, hi), log) in [
            ("lr", self.lr, true),
            ("alpha_pos", self.alpha_pos, false),
            ("alpha_dep", self.alpha_dep, false),
            ("alpha_static", self.alpha_static, false),
            ("alpha_sparse", self.alpha_sparse, false),
            ("l1_ctx", self.l1_ctx, true),
            ("l1_static", self.l1_static, true),
        ] {
            let floor_ok = if log { lo > 0.0 } else { lo >= 0.0 };
            if !(lo.is_finite() && hi.is_finite() && floor_ok && lo <= hi) {
                return bad(format!("{name} range ({lo}, {hi}) is invalid"));
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> DictConfig {
        fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
            if lo == hi { lo } else { rng.random_range(lo..=hi) }
        }
        fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
            uniform(rng, (lo.ln(), hi.ln())).exp().clamp(lo, hi)
        }
        let k = self.k[rng.random_range(0..self.k.len())];
        DictConfig {
            lr: log_uniform(rng, self.lr),
            k,
            nonlinearity: self.nonlinearity[rng.random_range(0..self.nonlinearity.len())],
            alpha_pos: uniform(rng, self.alpha_pos),
            alpha_dep: uniform(rng, self.alpha_dep),
            alpha_static: uniform(rng, self.alpha_static),
            alpha_sparse: uniform(rng, self.alpha_sparse),
            l1_ctx: log_uniform(rng, self.l1_ctx),
            l1_static: log_uniform(rng, self.l1_static),
            epochs: self.epochs,
            batch_size: self.batch_size,
            topk: self.topk.map(|t| t.min(k)),
            encoder_bias: self.encoder_bias,
            resample_atoms: self.resample_atoms,
            seed: rng.random(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub index: usize,
    pub config: DictConfig,
    pub metrics: Option<EvalMetrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<TrialRow>,
    /// Index and model of the best trial, if any trial succeeded.
    pub best: Option<(usize, DictModel)>,
}

/// Seeded random search. Configurations are drawn sequentially from `seed`,
/// then trained concurrently; failed trials are recorded, not fatal.
pub fn sweep(
    train_split: &Corpus,
    val_split: &Corpus,
    space: &SearchSpace,
    n_trials: usize,
    seed: u64,
) -> Result<SweepOutcome, DictError> {
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs: Vec<DictConfig> = (0..n_trials).map(|_| space.sample(&mut rng)).collect();
    let results: Vec<(TrialRow, Option<DictModel>)> = configs
        .into_par_iter()
        .enumerate()
        .map(|(index, config)| {
            let outcome = train(train_split, val_split, &config)
                .and_then(|(model, _)| evaluate(&model, val_split).map(|m| (model, m)));
            match outcome {
                Ok((model, metrics)) => (TrialRow { index, config, metrics: Some(metrics), error: None }, Some(model)),
                Err(e) => (TrialRow { index, config, metrics: None, error: Some(e.to_string()) }, None),
            }
        })
        .collect();
    let (rows, mut models): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let best = best_trial(&rows).map(|i| (i, models[i].take().expect("successful trial has a model")));
    Ok(SweepOutcome { rows, best })
}

/// Highest validation f1_pos, then lowest val_recon, then lowest index.
pub fn best_trial(rows: &[TrialRow]) -> Option<usize> {
    rows.iter()
        .filter_map(|r| r.metrics.map(|m| (r.index, m)))
        .min_by(|(ia, a), (ib, b)| {
            b.f1_pos
                .total_cmp(&a.f1_pos)
                .then(a.val_recon.total_cmp(&b.val_recon))
                .then(ia.cmp(ib))
        })
        .and_then(|(index, _)| rows.iter().position(|r| r.index == index))
}

/// Failed trials keep their configuration columns and leave metrics empty.
pub fn sweep_csv(rows: &[TrialRow]) -> String {
    to_csv(
        &SWEEP_COLUMNS,
        rows.iter().map(|r| {
            let c = &r.config;
            let mut out = vec![r.index.to_string(), c.lr.to_string(), c.k.to_string(), c.nonlinearity.as_str().to_string()];
            match &r.metrics {
                Some(m) => out.extend([m.val_recon, m.l1_s_contextual, m.f1_pos, m.f1_dep].map(|v| v.to_string())),
                None => out.extend(std::iter::repeat_n(String::new(), 4)),
            }
            out
        }),
    )
}

pub fn write_sweep_csv(rows: &[TrialRow], path: &Path) -> std::io::Result<()> {
    std::fs::File::create(path)?.write_all(sweep_csv(rows).as_bytes())
}
