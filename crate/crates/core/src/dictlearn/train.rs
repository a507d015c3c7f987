use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::artifact::vocab_hash;
use super::model::{DictModel, LossTerms, ModelDims};
use super::{DictConfig, DictError};
use crate::corpus::Corpus;
use crate::table::to_csv;
use crate::metrics::{argmax, classification_scores};
use crate::numkit::{cosine_decay, AdamState};
use crate::LabelKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub total: f64,
    pub recon_ctx: f64,
    pub recon_static: f64,
    pub ce_pos: f64,
    pub ce_dep: f64,
    pub sparsity: f64,
    pub val_recon: f64,
    pub val_f1_pos: f64,
    pub val_f1_dep: f64,
    /// Atoms re-seeded at the end of this epoch.
    pub resampled: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub const CSV_COLUMNS: [&'static str; 11] = [
        "epoch",
        "total",
        "recon_ctx",
        "recon_static",
        "ce_pos",
        "ce_dep",
        "sparsity",
        "val_recon",
        "val_f1_pos",
        "val_f1_dep",
        "resampled",
    ];

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    pub fn to_csv(&self) -> String {
        to_csv(
            &Self::CSV_COLUMNS,
            self.epochs.iter().map(|r| {
                let mut row = vec![r.epoch.to_string()];
                row.extend(
                    [r.total, r.recon_ctx, r.recon_static, r.ce_pos, r.ce_dep, r.sparsity, r.val_recon, r.val_f1_pos, r.val_f1_dep]
                        .map(|v| v.to_string()),
                );
                row.push(r.resampled.to_string());
                row
            }),
        )
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::File::create(path)?.write_all(self.to_csv().as_bytes())
    }
}

/// Held-out quality of a dictionary model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    /// Mean over tokens of `‖x − x̂‖² / d`.
    pub val_recon: f64,
    pub f1_pos: f64,
    pub f1_dep: f64,
    pub acc_pos: f64,
    pub acc_dep: f64,
    /// Mean over tokens of `‖z_ctx‖₁ / k`.
    pub l1_s_contextual: f64,
    pub l1_s_static: f64,
}

const EVAL_CHUNK: usize = 1024;

pub(super) fn as_f64(m: &Array2<f32>) -> Array2<f64> {
    m.mapv(f64::from)
}

fn check_corpus(model: &DictModel, corpus: &Corpus) -> Result<(), DictError> {
    let dims = model.dims();
    if corpus.dim() != dims.d || corpus.static_dim() != dims.d_static {
        return Err(DictError::Shape(format!(
            "corpus dims ({}, {}) do not match model dims ({}, {})",
            corpus.dim(),
            corpus.static_dim(),
            dims.d,
            dims.d_static
        )));
    }
    if !model.pos_vocab_hash.is_empty() && model.pos_vocab_hash != vocab_hash(&corpus.pos_vocab) {
        return Err(DictError::VocabMismatch("pos".into()));
    }
    if !model.dep_vocab_hash.is_empty() && model.dep_vocab_hash != vocab_hash(&corpus.dep_vocab) {
        return Err(DictError::VocabMismatch("dep".into()));
    }
    if corpus.pos_vocab.len() != dims.n_pos || corpus.dep_vocab.len() != dims.n_dep {
        return Err(DictError::VocabMismatch(format!(
            "corpus has {} / {} labels, model {} / {}",
            corpus.pos_vocab.len(),
            corpus.dep_vocab.len(),
            dims.n_pos,
            dims.n_dep
        )));
    }
    Ok(())
}

pub fn evaluate(model: &DictModel, corpus: &Corpus) -> Result<EvalMetrics, DictError> {
    check_corpus(model, corpus)?;
    let n = corpus.num_tokens();
    if n == 0 {
        return Err(DictError::EmptySplit("evaluation"));
    }
    let (d, k) = (model.dims().d as f64, model.k() as f64);
    let mut sq = 0.0;
    let mut l1c = 0.0;
    let mut l1s = 0.0;
    let mut pred_pos = Vec::with_capacity(n);
    let mut pred_dep = Vec::with_capacity(n);
    for start in (0..n).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(n);
        let x = as_f64(&corpus.contextual.slice(ndarray::s![start..end, ..]).to_owned());
        let (zc, zs) = model.encode_batch(&x.view())?;
        let z = &zc + &zs;
        let resid = z.dot(&model.dictionary().t()) - &x;
        sq += resid.iter().map(|v| v * v).sum::<f64>();
        l1c += zc.iter().map(|v| v.abs()).sum::<f64>();
        l1s += zs.iter().map(|v| v.abs()).sum::<f64>();
        let lp = z.dot(&model.w_pos().t()) + model.b_pos();
        let ld = z.dot(&model.w_dep().t()) + model.b_dep();
        pred_pos.extend(lp.rows().into_iter().map(|r| argmax(r.as_slice().expect("row"))));
        pred_dep.extend(ld.rows().into_iter().map(|r| argmax(r.as_slice().expect("row"))));
    }
    let n_f = n as f64;
    let pos = classification_scores(&corpus.labels(LabelKind::Pos), &pred_pos, model.dims().n_pos);
    let dep = classification_scores(&corpus.labels(LabelKind::Dep), &pred_dep, model.dims().n_dep);
    let m = EvalMetrics {
        val_recon: sq / (n_f * d),
        f1_pos: pos.macro_f1,
        f1_dep: dep.macro_f1,
        acc_pos: pos.accuracy,
        acc_dep: dep.accuracy,
        l1_s_contextual: l1c / (n_f * k),
        l1_s_static: l1s / (n_f * k),
    };
    if !m.val_recon.is_finite() {
        return Err(DictError::NonFinite { term: "val_recon" });
    }
    Ok(m)
}

/// Trains a dictionary model with Adam (cosine learning-rate decay to a
/// tenth of `lr`), renormalizing atoms after every epoch.
pub fn train(train: &Corpus, val: &Corpus, config: &DictConfig) -> Result<(DictModel, TrainHistory), DictError> {
    config.validate()?;
    if train.num_tokens() == 0 {
        return Err(DictError::EmptySplit("train"));
    }
    if val.num_tokens() == 0 {
        return Err(DictError::EmptySplit("validation"));
    }
    let dims = ModelDims {
        d: train.dim(),
        d_static: train.static_dim(),
        k: config.k,
        n_pos: train.pos_vocab.len(),
        n_dep: train.dep_vocab.len(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = DictModel::init(dims, config, &mut rng);
    model.pos_vocab_hash = vocab_hash(&train.pos_vocab);
    model.dep_vocab_hash = vocab_hash(&train.dep_vocab);
    check_corpus(&model, val)?;

    let x_all = as_f64(&train.contextual);
    model.seed_atoms_from_data(&x_all.view(), &mut rng);
    let w_all = as_f64(&train.static_emb);
    let y_pos = train.labels(LabelKind::Pos);
    let y_dep = train.labels(LabelKind::Dep);
    let n = train.num_tokens();
    let batches_per_epoch = n.div_ceil(config.batch_size);
    let total_steps = (batches_per_epoch * config.epochs) as f64;

    let mut adam = AdamState::new(model.params().len(), config.lr);
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0usize;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sums = LossTerms::default();
        for idx in order.chunks(config.batch_size) {
            let x = x_all.select(Axis(0), idx);
            let w = w_all.select(Axis(0), idx);
            let yp: Vec<usize> = idx.iter().map(|&i| y_pos[i]).collect();
            let yd: Vec<usize> = idx.iter().map(|&i| y_dep[i]).collect();
            let (terms, grad) = match model.loss(&x.view(), &w.view(), &yp, &yd, config, true) {
                Ok(r) => r,
                Err(DictError::NonFinite { term }) => {
                    return Err(DictError::Diverged { epoch, term, history });
                }
                Err(e) => return Err(e),
            };
            let weight = idx.len() as f64 / n as f64;
            sums.total += terms.total * weight;
            sums.recon_ctx += terms.recon_ctx * weight;
            sums.recon_static += terms.recon_static * weight;
            sums.ce_pos += terms.ce_pos * weight;
            sums.ce_dep += terms.ce_dep * weight;
            sums.sparsity += terms.sparsity * weight;

            adam.lr = cosine_decay(config.lr, step as f64 / total_steps);
            if adam.apply(model.params_mut(), &grad.expect("gradient requested")).is_err() {
                return Err(DictError::Diverged { epoch, term: "gradient", history });
            }
            step += 1;
        }
        model.renormalize_atoms(&mut rng);
        let mut resampled = 0;
        if config.resample_atoms && epoch + 1 < config.epochs.div_ceil(2) {
            let reset = resample_atoms(&mut model, &x_all.view(), &mut rng)?;
            for &j in &reset {
                for idx in model.atom_param_indices(j) {
                    adam.m[idx] = 0.0;
                    adam.v[idx] = 0.0;
                }
            }
            resampled = reset.len();
        }
        let eval = match evaluate(&model, val) {
            Ok(m) => m,
            Err(DictError::NonFinite { term }) => return Err(DictError::Diverged { epoch, term, history }),
            Err(e) => return Err(e),
        };
        history.epochs.push(EpochRecord {
            epoch,
            total: sums.total,
            recon_ctx: sums.recon_ctx,
            recon_static: sums.recon_static,
            ce_pos: sums.ce_pos,
            ce_dep: sums.ce_dep,
            sparsity: sums.sparsity,
            val_recon: eval.val_recon,
            val_f1_pos: eval.f1_pos,
            val_f1_dep: eval.f1_dep,
            resampled,
        });
    }
    Ok((model, history))
}

/// Rows scored when looking for dead atoms and re-seeding directions.
const RESAMPLE_POOL: usize = 4096;
/// Atoms active on fewer than this fraction of the pool count as dead.
const DEAD_USAGE: f64 = 1e-3;
/// Of two atoms with a larger absolute cosine, the less used one is re-seeded.
const DUPLICATE_COSINE: f64 = 0.9;

/// Re-seeds dead and duplicated atoms along the residuals of the worst
/// reconstructed tokens. Returns the atoms that were reset.
fn resample_atoms(model: &mut DictModel, x_all: &ArrayView2<f64>, rng: &mut ChaCha8Rng) -> Result<Vec<usize>, DictError> {
    let n = x_all.nrows();
    let rows: Vec<usize> = if n > RESAMPLE_POOL {
        let mut r = rand::seq::index::sample(rng, n, RESAMPLE_POOL).into_vec();
        r.sort_unstable();
        r
    } else {
        (0..n).collect()
    };
    let x = x_all.select(Axis(0), &rows);
    let z = model.codes(&x.view())?;
    let k = model.k();
    let usage: Vec<usize> = (0..k).map(|j| z.column(j).iter().filter(|v| **v != 0.0).count()).collect();

    let mut flagged: Vec<usize> = (0..k)
        .filter(|&j| (usage[j] as f64) < DEAD_USAGE * rows.len() as f64)
        .collect();
    let dict = model.dictionary().to_owned();
    for a in 0..k {
        for b in a + 1..k {
            if flagged.contains(&a) || flagged.contains(&b) {
                continue;
            }
            let c = dict.column(a).dot(&dict.column(b)).abs();
            if c > DUPLICATE_COSINE {
                flagged.push(if usage[b] <= usage[a] { b } else { a });
            }
        }
    }
    if flagged.is_empty() {
        return Ok(flagged);
    }
    flagged.sort_unstable();

    let resid = &x - &z.dot(&dict.t());
    let err: Vec<f64> = resid.rows().into_iter().map(|r| r.dot(&r)).collect();
    let mut worst: Vec<usize> = (0..rows.len()).collect();
    worst.sort_by(|&a, &b| err[b].total_cmp(&err[a]).then(a.cmp(&b)));
    let mut reset = Vec::new();
    for (&j, &r) in flagged.iter().zip(&worst) {
        if err[r] <= 1e-12 {
            break;
        }
        model.reset_atom(j, resid.row(r).as_slice().expect("row"));
        reset.push(j);
    }
    Ok(reset)
}
