//! Supervised probes over contextual token embeddings.
//!
//! A probe is either linear (`W x + b`) or a one-hidden-layer ReLU MLP of
//! width `2d`. Probes are trained with Adam on mini-batches of 128 tokens and
//! stop early on validation loss, keeping the best epoch's weights.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::metrics::{argmax, classification_scores};
use crate::numkit::{cosine, cross_entropy, svd, AdamState, NumError};
use crate::params::ParamLayout;
use crate::table::to_csv;
use crate::LabelKind;

/// Positions at or beyond this index share the last bucket.
pub const POSITION_BUCKETS: usize = 32;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("probe classes do not match corpus vocabulary for {0}")]
    VocabMismatch(ProbeTarget),
    #[error("SVD alignment needs a linear probe")]
    NotLinear,
    #[error("input has {got} dimensions, probe expects {expected}")]
    Shape { expected: usize, got: usize },
    #[error("probe training diverged in epoch {0}")]
    Diverged(usize),
    #[error(transparent)]
    Num(#[from] NumError),
}

macro_rules! str_enum {
    ($name:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        impl $name {
            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $s),+ }
            }
        }
        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($s => Ok($name::$variant),)+
                    other => Err(format!("unknown {} `{other}`", stringify!($name))),
                }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeArch {
    Linear,
    Mlp,
}
str_enum!(ProbeArch { Linear => "linear", Mlp => "mlp" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeTarget {
    Pos,
    Dep,
    Position,
}
str_enum!(ProbeTarget { Pos => "pos", Dep => "dep", Position => "position" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeMode {
    Standard,
    Shuffled,
    Random,
}
str_enum!(ProbeMode { Standard => "standard", Shuffled => "shuffled", Random => "random" });

impl ProbeTarget {
    /// Class names for this target. Position classes are `0..n` where `n`
    /// is one past the largest observed position, capped at
    /// `POSITION_BUCKETS`.
    pub fn classes(self, corpus: &Corpus) -> Vec<String> {
        match self {
            ProbeTarget::Pos => corpus.pos_vocab.clone(),
            ProbeTarget::Dep => corpus.dep_vocab.clone(),
            ProbeTarget::Position => {
                let max = corpus.tokens.iter().map(|t| t.position).max().unwrap_or(0);
                (0..(max + 1).min(POSITION_BUCKETS)).map(|p| p.to_string()).collect()
            }
        }
    }

    /// Label index per token for a problem with `n_classes` classes.
    pub fn labels(self, corpus: &Corpus, n_classes: usize) -> Vec<usize> {
        match self {
            ProbeTarget::Pos => corpus.labels(LabelKind::Pos),
            ProbeTarget::Dep => corpus.labels(LabelKind::Dep),
            ProbeTarget::Position => corpus
                .tokens
                .iter()
                .map(|t| t.position.min(n_classes.saturating_sub(1)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeHyper {
    pub batch_size: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for ProbeHyper {
    fn default() -> Self {
        Self {
            batch_size: 128,
            lr: 1e-3,
            max_epochs: 50,
            patience: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeMetrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    pub mode: ProbeMode,
    /// Accuracy on the training split, reported for sanity checks.
    pub train_accuracy: Option<f64>,
    pub epochs_trained: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub arch: ProbeArch,
    pub target: ProbeTarget,
    pub classes: Vec<String>,
    d: usize,
    hidden: usize,
    layout: ParamLayout,
    params: Vec<f64>,
}

const W1: usize = 0;
const B1: usize = 1;
const W2: usize = 2;
const B2: usize = 3;

impl ProbeModel {
    /// Glorot-uniform weights and zero biases.
    pub fn init(arch: ProbeArch, target: ProbeTarget, classes: Vec<String>, d: usize, rng: &mut ChaCha8Rng) -> Self {
        let c = classes.len();
        let hidden = match arch {
            ProbeArch::Linear => 0,
            ProbeArch::Mlp => 2 * d,
        };
        let mut layout = ParamLayout::new();
        let out1 = if hidden == 0 { c } else { hidden };
        layout.push("W1", out1, d);
        layout.push("b1", 1, out1);
        if hidden > 0 {
            layout.push("W2", c, hidden);
            layout.push("b2", 1, c);
        }
        let mut params = vec![0.0; layout.total()];
        let glorot = |params: &mut [f64], idx: usize, rng: &mut ChaCha8Rng| {
            let b = layout.block(idx);
            let limit = (6.0 / (b.rows + b.cols) as f64).sqrt();
            for v in layout.slice_mut(params, idx) {
                *v = rng.random_range(-limit..limit);
            }
        };
        glorot(&mut params, W1, rng);
        if hidden > 0 {
            glorot(&mut params, W2, rng);
        }
        Self {
            arch,
            target,
            classes,
            d,
            hidden,
            layout,
            params,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }

    /// First-layer weights: class rows for a linear probe, hidden rows for
    /// an MLP.
    pub fn w1(&self) -> ArrayView2<'_, f64> {
        self.layout.view(&self.params, W1)
    }

    pub fn w1_mut(&mut self) -> ndarray::ArrayViewMut2<'_, f64> {
        self.layout.view_mut(&mut self.params, W1)
    }

    pub fn b1_mut(&mut self) -> ndarray::ArrayViewMut2<'_, f64> {
        self.layout.view_mut(&mut self.params, B1)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn logits(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>, ProbeError> {
        if x.ncols() != self.d {
            return Err(ProbeError::Shape { expected: self.d, got: x.ncols() });
        }
        Ok(self.forward(x).1)
    }

    /// Returns (hidden activations if any, logits).
    fn forward(&self, x: &ArrayView2<f64>) -> (Option<Array2<f64>>, Array2<f64>) {
        let l = &self.layout;
        let mut a = x.dot(&l.view(&self.params, W1).t());
        a += &l.view(&self.params, B1).row(0);
        if self.hidden == 0 {
            return (None, a);
        }
        a.mapv_inplace(|v| v.max(0.0));
        let mut out = a.dot(&l.view(&self.params, W2).t());
        out += &l.view(&self.params, B2).row(0);
        (Some(a), out)
    }

    /// Mean cross-entropy over the batch and its gradient.
    fn loss_grad(&self, x: &ArrayView2<f64>, y: &[usize], want_grad: bool) -> Result<(f64, Option<Vec<f64>>), ProbeError> {
        let (hidden, logits) = self.forward(x);
        let inv_b = 1.0 / y.len() as f64;
        let mut loss = 0.0;
        let mut g = Array2::<f64>::zeros(logits.dim());
        for (r, &label) in y.iter().enumerate() {
            let (l, grad) = cross_entropy(logits.row(r).as_slice().expect("row"), label)?;
            loss += l * inv_b;
            for (c, v) in grad.into_iter().enumerate() {
                g[[r, c]] = v * inv_b;
            }
        }
        if !want_grad {
            return Ok((loss, None));
        }
        let l = &self.layout;
        let mut grad = vec![0.0; l.total()];
        let g_first = match hidden {
            None => g,
            Some(h) => {
                l.view_mut(&mut grad, W2).assign(&g.t().dot(&h));
                l.view_mut(&mut grad, B2).row_mut(0).assign(&g.sum_axis(Axis(0)));
                let mut gh = g.dot(&l.view(&self.params, W2));
                gh.zip_mut_with(&h, |v, &a| {
                    if a <= 0.0 {
                        *v = 0.0
                    }
                });
                gh
            }
        };
        l.view_mut(&mut grad, W1).assign(&g_first.t().dot(x));
        l.view_mut(&mut grad, B1).row_mut(0).assign(&g_first.sum_axis(Axis(0)));
        Ok((loss, Some(grad)))
    }

    pub fn predict(&self, x: &ArrayView2<f64>) -> Result<Vec<usize>, ProbeError> {
        Ok(self
            .logits(x)?
            .rows()
            .into_iter()
            .map(|r| argmax(r.as_slice().expect("row")))
            .collect())
    }
}

fn embeddings(corpus: &Corpus) -> Array2<f64> {
    corpus.contextual.mapv(f64::from)
}

fn scores(truth: &[usize], pred: &[usize], n_classes: usize, mode: ProbeMode) -> ProbeMetrics {
    let s = classification_scores(truth, pred, n_classes);
    ProbeMetrics {
        accuracy: s.accuracy,
        macro_f1: s.macro_f1,
        per_class_f1: s.per_class_f1,
        mode,
        train_accuracy: None,
        epochs_trained: 0,
        warnings: Vec::new(),
    }
}

fn check_classes(model: &ProbeModel, corpus: &Corpus) -> Result<(), ProbeError> {
    let ok = match model.target {
        ProbeTarget::Pos => corpus.pos_vocab == model.classes,
        ProbeTarget::Dep => corpus.dep_vocab == model.classes,
        ProbeTarget::Position => true,
    };
    if ok { Ok(()) } else { Err(ProbeError::VocabMismatch(model.target)) }
}

pub fn eval_probe(model: &ProbeModel, data: &Corpus) -> Result<ProbeMetrics, ProbeError> {
    check_classes(model, data)?;
    if data.num_tokens() == 0 {
        return Err(ProbeError::EmptySplit("evaluation"));
    }
    let pred = model.predict(&embeddings(data).view())?;
    let truth = model.target.labels(data, model.n_classes());
    Ok(scores(&truth, &pred, model.n_classes(), ProbeMode::Standard))
}

pub fn train_probe(
    train: &Corpus,
    val: &Corpus,
    target: ProbeTarget,
    arch: ProbeArch,
    hyper: &ProbeHyper,
    mode: ProbeMode,
    seed: u64,
) -> Result<(ProbeModel, ProbeMetrics), ProbeError> {
    if train.num_tokens() == 0 {
        return Err(ProbeError::EmptySplit("train"));
    }
    if val.num_tokens() == 0 {
        return Err(ProbeError::EmptySplit("validation"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = target.classes(train);
    let n_classes = classes.len();
    let mut model = ProbeModel::init(arch, target, classes, train.dim(), &mut rng);
    check_classes(&model, val)?;

    let x = embeddings(train);
    let mut y = target.labels(train, n_classes);
    if mode == ProbeMode::Shuffled {
        y.shuffle(&mut rng);
    }
    let xv = embeddings(val);
    let yv = target.labels(val, n_classes);

    let mut warnings = Vec::new();
    if y.iter().all(|&c| c == y[0]) {
        warnings.push(format!("training labels contain a single class ({})", model.classes[y[0]]));
    }

    let mut adam = AdamState::new(model.params.len(), hyper.lr);
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut best = (f64::INFINITY, model.params.clone());
    let mut since_best = 0;
    let mut epochs_trained = 0;
    for epoch in 0..hyper.max_epochs {
        order.shuffle(&mut rng);
        for idx in order.chunks(hyper.batch_size.max(1)) {
            let xb = x.select(Axis(0), idx);
            let yb: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
            let (_, grad) = model.loss_grad(&xb.view(), &yb, true)?;
            adam.apply(&mut model.params, &grad.expect("gradient"))
                .map_err(|_| ProbeError::Diverged(epoch))?;
        }
        epochs_trained = epoch + 1;
        let (val_loss, _) = model.loss_grad(&xv.view(), &yv, false)?;
        if !val_loss.is_finite() {
            return Err(ProbeError::Diverged(epoch));
        }
        if val_loss < best.0 {
            best = (val_loss, model.params.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= hyper.patience {
                break;
            }
        }
    }
    model.params = best.1;

    let pred = model.predict(&xv.view())?;
    let mut metrics = scores(&yv, &pred, n_classes, mode);
    let train_acc = eval_probe(&model, train)?.accuracy;
    if mode == ProbeMode::Standard && train_acc < metrics.accuracy - 0.02 {
        warnings.push(format!(
            "training accuracy {train_acc:.4} is below validation accuracy {:.4}",
            metrics.accuracy
        ));
    }
    metrics.train_accuracy = Some(train_acc);
    metrics.epochs_trained = epochs_trained;
    metrics.warnings = warnings;
    Ok((model, metrics))
}

/// Uniformly random predictions over the target's classes.
pub fn random_baseline(val: &Corpus, target: ProbeTarget, seed: u64) -> Result<ProbeMetrics, ProbeError> {
    if val.num_tokens() == 0 {
        return Err(ProbeError::EmptySplit("validation"));
    }
    let n_classes = target.classes(val).len();
    let truth = target.labels(val, n_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pred: Vec<usize> = truth.iter().map(|_| rng.random_range(0..n_classes)).collect();
    Ok(scores(&truth, &pred, n_classes, ProbeMode::Random))
}

/// Cosine between each class row of a linear probe's weights and each right
/// singular vector of that weight matrix, by descending singular value.
pub fn probe_svd_alignment(model: &ProbeModel) -> Result<Array2<f64>, ProbeError> {
    if model.arch != ProbeArch::Linear {
        return Err(ProbeError::NotLinear);
    }
    let w = model.w1().to_owned();
    let s = svd(&w)?;
    let (c, r) = (w.nrows(), s.vt.nrows());
    let mut out = Array2::zeros((c, r));
    for i in 0..c {
        let row = w.row(i).to_vec();
        for j in 0..r {
            out[[i, j]] = cosine(&row, &s.vt.row(j).to_vec());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResultRow {
    pub model_name: String,
    pub target: ProbeTarget,
    pub arch: Option<ProbeArch>,
    pub mode: ProbeMode,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub seed: u64,
}

pub const PROBE_RESULT_COLUMNS: [&str; 7] = ["model_name", "target", "arch", "mode", "accuracy", "macro_f1", "seed"];

/// Baseline rows without an architecture report `none`.
pub fn probe_results_csv(rows: &[ProbeResultRow]) -> String {
    to_csv(
        &PROBE_RESULT_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.model_name.clone(),
                r.target.to_string(),
                r.arch.map(|a| a.as_str()).unwrap_or("none").to_string(),
                r.mode.to_string(),
                r.accuracy.to_string(),
                r.macro_f1.to_string(),
                r.seed.to_string(),
            ]
        }),
    )
}

pub fn svd_alignment_csv(classes: &[String], alignment: &Array2<f64>) -> String {
    to_csv(
        &["class", "singular_index", "cosine"],
        alignment.rows().into_iter().enumerate().flat_map(|(c, row)| {
            row.iter()
                .enumerate()
                .map(|(j, v)| vec![classes[c].clone(), j.to_string(), v.to_string()])
                .collect::<Vec<_>>()
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, split_corpus, SplitSpec, SyntheticSpec};
    use crate::numkit::grad_check;

    fn synthetic(n_pos: usize, noise: f64, seed: u64) -> (Corpus, Corpus) {
        let spec = SyntheticSpec {
            k: 2 * n_pos,
            d: 48,
            n_sentences: 300,
            tokens_per_sentence: 8,
            active_atoms: 2,
            noise_std: noise,
            seed,
            n_pos,
            n_dep: 3,
            contextual_only: 2,
        };
        let (c, _) = generate_synthetic(&spec).unwrap();
        let (tr, va, _) = split_corpus(&c, &SplitSpec { train_frac: 0.7, val_frac: 0.3, test_frac: 0.0, seed }).unwrap();
        (tr, va)
    }

    fn classes(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("C{i}")).collect()
    }

    #[test]
    fn gradients_match_finite_differences() {
        for arch in [ProbeArch::Linear, ProbeArch::Mlp] {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let model = ProbeModel::init(arch, ProbeTarget::Pos, classes(4), 5, &mut rng);
            let x = Array2::from_shape_fn((6, 5), |_| rng.random_range(-1.0..1.0));
            let y = vec![0, 1, 2, 3, 1, 0];
            let f = |p: &[f64]| {
                let mut m = model.clone();
                m.params = p.to_vec();
                let (l, g) = m.loss_grad(&x.view(), &y, true).unwrap();
                (l, g.unwrap())
            };
            let r = grad_check(f, model.params(), 1e-5).unwrap();
            assert!(r.max_rel_err <= 1e-4, "{arch}: {r:?}");
        }
    }

    #[test]
    fn linear_probe_separates_synthetic_labels() {
        let (tr, va) = synthetic(6, 0.0, 1);
        let (_, m) = train_probe(&tr, &va, ProbeTarget::Pos, ProbeArch::Linear, &ProbeHyper::default(), ProbeMode::Standard, 0).unwrap();
        assert!(m.accuracy >= 0.99, "{m:?}");
        assert!(m.warnings.is_empty(), "{m:?}");
    }

    #[test]
    fn shuffled_probe_is_near_chance() {
        let (tr, va) = synthetic(6, 0.0, 2);
        let hyper = ProbeHyper { max_epochs: 10, ..Default::default() };
        let (_, m) = train_probe(&tr, &va, ProbeTarget::Pos, ProbeArch::Linear, &hyper, ProbeMode::Shuffled, 0).unwrap();
        assert!((m.accuracy - 1.0 / 6.0).abs() <= 0.08, "{m:?}");
    }

    #[test]
    fn training_is_deterministic() {
        let (tr, va) = synthetic(4, 0.01, 3);
        let hyper = ProbeHyper { max_epochs: 3, ..Default::default() };
        let a = train_probe(&tr, &va, ProbeTarget::Dep, ProbeArch::Mlp, &hyper, ProbeMode::Standard, 5).unwrap();
        let b = train_probe(&tr, &va, ProbeTarget::Dep, ProbeArch::Mlp, &hyper, ProbeMode::Standard, 5).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn random_baseline_is_uniform_not_majority() {
        let mut c = crate::corpus::fixtures::small_corpus();
        // 90/10 imbalance on two classes
        let n = 2000;
        let tokens: Vec<_> = (0..n)
            .map(|i| crate::TokenRecord {
                sentence_id: i / 10,
                position: i % 10,
                word: "w".into(),
                pos_id: usize::from(i % 10 == 0),
                dep_id: 0,
            })
            .collect();
        c.pos_vocab = classes(2);
        c.tokens = tokens;
        c.contextual = Array2::zeros((n, c.dim()));
        c.static_emb = Array2::zeros((n, c.static_dim()));
        c.num_sentences = n / 10;
        let m = random_baseline(&c, ProbeTarget::Pos, 1).unwrap();
        assert!((m.accuracy - 0.5).abs() <= 0.05, "{m:?}");
        assert_eq!(m, random_baseline(&c, ProbeTarget::Pos, 1).unwrap());
        assert_eq!(m.mode, ProbeMode::Random);
    }

    #[test]
    fn constant_class_zero_model_scores_one_on_class_zero_data() {
        let mut c = crate::corpus::fixtures::small_corpus();
        for t in &mut c.tokens {
            t.pos_id = 0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = ProbeModel::init(ProbeArch::Linear, ProbeTarget::Pos, c.pos_vocab.clone(), c.dim(), &mut rng);
        m.w1_mut().fill(0.0);
        m.b1_mut()[[0, 0]] = 1.0;
        let metrics = eval_probe(&m, &c).unwrap();
        assert_eq!(metrics.accuracy, 1.0);
    }

    #[test]
    fn random_weights_score_near_chance() {
        let (_, va) = synthetic(8, 0.01, 4);
        let mut total = 0.0;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = ProbeModel::init(ProbeArch::Linear, ProbeTarget::Pos, va.pos_vocab.clone(), va.dim(), &mut rng);
            total += eval_probe(&m, &va).unwrap().accuracy;
        }
        assert!((total / 10.0 - 1.0 / 8.0).abs() <= 0.06, "{}", total / 10.0);
    }

    #[test]
    fn vocab_mismatch_is_rejected() {
        let c = crate::corpus::fixtures::small_corpus();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = ProbeModel::init(ProbeArch::Linear, ProbeTarget::Pos, classes(3), c.dim(), &mut rng);
        assert!(matches!(eval_probe(&m, &c), Err(ProbeError::VocabMismatch(ProbeTarget::Pos))));
    }

    #[test]
    fn positions_are_bucketed() {
        let mut c = crate::corpus::fixtures::small_corpus();
        c.tokens[4].position = 40;
        let classes = ProbeTarget::Position.classes(&c);
        assert_eq!(classes.len(), POSITION_BUCKETS);
        let labels = ProbeTarget::Position.labels(&c, classes.len());
        assert_eq!(labels[4], POSITION_BUCKETS - 1);
        assert_eq!(labels[0], 0);
    }

    #[test]
    fn orthogonal_rows_align_as_signed_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = ProbeModel::init(ProbeArch::Linear, ProbeTarget::Pos, classes(3), 5, &mut rng);
        m.b1_mut().fill(0.0);
        let mut w = m.w1_mut();
        w.fill(0.0);
        w[[0, 2]] = 3.0;
        w[[1, 0]] = -1.0;
        w[[2, 4]] = 2.0;
        let a = probe_svd_alignment(&m).unwrap();
        assert_eq!(a.dim(), (3, 3));
        for row in a.rows() {
            let ones = row.iter().filter(|v| (v.abs() - 1.0).abs() < 1e-9).count();
            let zeros = row.iter().filter(|v| v.abs() < 1e-9).count();
            assert_eq!((ones, zeros), (1, 2), "{a:?}");
        }
        // largest singular value belongs to the class with norm 3
        assert!((a[[0, 0]].abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rank_one_weights_align_with_first_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = ProbeModel::init(ProbeArch::Linear, ProbeTarget::Pos, classes(3), 4, &mut rng);
        let base = [0.5, -1.0, 2.0, 0.25];
        let mut w = m.w1_mut();
        for (i, scale) in [1.0, -2.0, 0.5].iter().enumerate() {
            for j in 0..4 {
                w[[i, j]] = scale * base[j];
            }
        }
        let a = probe_svd_alignment(&m).unwrap();
        for i in 0..3 {
            assert!((a[[i, 0]].abs() - 1.0).abs() < 1e-9);
            assert!(a[[i, 1]].abs() < 1e-6 && a[[i, 2]].abs() < 1e-6);
        }
    }

    #[test]
    fn alignment_requires_linear_probe() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = ProbeModel::init(ProbeArch::Mlp, ProbeTarget::Pos, classes(3), 4, &mut rng);
        assert!(matches!(probe_svd_alignment(&m), Err(ProbeError::NotLinear)));
    }

    #[test]
    fn csv_layouts() {
        let rows = vec![ProbeResultRow {
            model_name: "m".into(),
            target: ProbeTarget::Dep,
            arch: Some(ProbeArch::Mlp),
            mode: ProbeMode::Shuffled,
            accuracy: 0.5,
            macro_f1: 0.25,
            seed: 3,
        }];
        assert_eq!(probe_results_csv(&rows), "model_name,target,arch,mode,accuracy,macro_f1,seed\nm,dep,mlp,shuffled,0.5,0.25,3\n");
        let a = Array2::from_shape_vec((1, 2), vec![1.0, 0.0]).unwrap();
        assert_eq!(svd_alignment_csv(&["NOUN".into()], &a), "class,singular_index,cosine\nNOUN,0,1\nNOUN,1,0\n");
    }
}
