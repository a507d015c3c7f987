//! Mean-pooling algebra over dictionary codes.
//!
//! Because decoding is linear, the pooled sentence vector of a perfectly
//! reconstructed corpus is `s = D z̄` with `z̄` the mean token code. Atom `k`
//! contributes `a_k = z̄_k ⟨d_k, s⟩` to `⟨ŝ, s⟩`, and atom contributions are
//! distributed over POS / DEP classes through fractional weights `π`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{is_special_token, Corpus};
use crate::dictlearn::{DictError, DictModel};
use crate::table::to_csv;
use crate::LabelKind;

/// Sums of contributions with magnitude at or below this are not normalized.
pub const DEGENERATE_SUM: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AttributionError {
    #[error("sentence {0} not found")]
    MissingSentence(usize),
    #[error("sentence {0} has no word tokens")]
    EmptySentence(usize),
    #[error("corpus has no poolable sentences")]
    EmptyCorpus,
    #[error("contributions sum to {0:e}; normalized attribution is undefined")]
    Degenerate(f64),
    #[error(transparent)]
    Dict(#[from] DictError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledSentence {
    pub sentence_id: usize,
    pub n_tokens: usize,
    /// Mean of the token embeddings.
    pub s: Vec<f64>,
    /// Mean of the token codes `z = z_ctx + z_static`.
    pub z_bar: Vec<f64>,
    /// `D z̄`.
    pub s_hat: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "sentence_id")]
pub enum Scope {
    Sentence(usize),
    Corpus,
}

/// Order of averaging and normalization for corpus-level contributions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationOrder {
    /// Average raw `a` over sentences, then normalize once.
    #[default]
    AverageThenNormalize,
    /// Normalize each sentence, then average; degenerate sentences are skipped.
    NormalizeThenAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributionReport {
    pub scope: Scope,
    pub a: Vec<f64>,
    /// `None` when `|Σ a| ≤ DEGENERATE_SUM`.
    pub a_norm: Option<Vec<f64>>,
    pub n_sentences: usize,
    /// Sentences left out of a normalize-then-average report.
    pub skipped: usize,
}

impl AttributionReport {
    pub fn is_degenerate(&self) -> bool {
        self.a_norm.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassAttribution {
    pub kind: LabelKind,
    pub classes: Vec<String>,
    /// `Σ_j π_jc · ā_norm_j`, renormalized to sum to one.
    pub shares: Vec<f64>,
    /// `Σ_j π_jc · ā_j` on the raw corpus-average contributions.
    pub raw_shares: Vec<f64>,
    pub pi: Array2<f64>,
    /// Atoms with no activation mass; their `π` rows are zero.
    pub inactive_atoms: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomStat {
    pub atom: usize,
    pub mean: f64,
    pub variance: f64,
}

fn normalize(a: &[f64]) -> Option<Vec<f64>> {
    let sum: f64 = a.iter().sum();
    (sum.abs() > DEGENERATE_SUM).then(|| a.iter().map(|v| v / sum).collect())
}

/// Codes and labels of word tokens, with special tokens dropped.
struct WordCodes {
    x: Array2<f64>,
    z: Array2<f64>,
    rows: Vec<usize>,
}

fn word_codes(model: &DictModel, corpus: &Corpus) -> Result<WordCodes, AttributionError> {
    let rows: Vec<usize> = (0..corpus.num_tokens())
        .filter(|&t| !is_special_token(&corpus.tokens[t].word))
        .collect();
    let x = corpus.contextual.select(Axis(0), &rows).mapv(f64::from);
    let z = model.codes(&x.view())?;
    Ok(WordCodes { x, z, rows })
}

/// Pools token embeddings and codes of the given rows.
pub fn pool_rows(model: &DictModel, sentence_id: usize, x: &ArrayView2<f64>) -> Result<PooledSentence, AttributionError> {
    if x.nrows() == 0 {
        return Err(AttributionError::EmptySentence(sentence_id));
    }
    let z = model.codes(x)?;
    Ok(pooled_from(model, sentence_id, x, &z.view()))
}

fn pooled_from(model: &DictModel, sentence_id: usize, x: &ArrayView2<f64>, z: &ArrayView2<f64>) -> PooledSentence {
    let s = x.mean_axis(Axis(0)).expect("non-empty");
    let z_bar = z.mean_axis(Axis(0)).expect("non-empty");
    let s_hat = model.dictionary().dot(&z_bar);
    PooledSentence {
        sentence_id,
        n_tokens: x.nrows(),
        s: s.to_vec(),
        z_bar: z_bar.to_vec(),
        s_hat: s_hat.to_vec(),
    }
}

pub fn pool_sentence(model: &DictModel, corpus: &Corpus, sentence_id: usize) -> Result<PooledSentence, AttributionError> {
    let range = corpus
        .sentence_rows(sentence_id)
        .map_err(|_| AttributionError::MissingSentence(sentence_id))?;
    let rows: Vec<usize> = range.filter(|&t| !is_special_token(&corpus.tokens[t].word)).collect();
    let x = corpus.contextual.select(Axis(0), &rows).mapv(f64::from);
    pool_rows(model, sentence_id, &x.view())
}

/// `a_k = z̄_k ⟨d_k, s⟩` and its normalization.
pub fn atom_contributions(pooled: &PooledSentence, model: &DictModel) -> AttributionReport {
    let s = Array1::from(pooled.s.clone());
    let proj = model.dictionary().t().dot(&s);
    let a: Vec<f64> = pooled.z_bar.iter().zip(proj.iter()).map(|(z, p)| z * p).collect();
    AttributionReport {
        scope: Scope::Sentence(pooled.sentence_id),
        a_norm: normalize(&a),
        a,
        n_sentences: 1,
        skipped: 0,
    }
}

fn sentence_reports(model: &DictModel, corpus: &Corpus, codes: &WordCodes) -> Vec<AttributionReport> {
    // group word rows by sentence, keeping corpus order
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, &t) in codes.rows.iter().enumerate() {
        let sid = corpus.tokens[t].sentence_id;
        match groups.last_mut() {
            Some((last, idx)) if *last == sid => idx.push(i),
            _ => groups.push((sid, vec![i])),
        }
    }
    groups
        .par_iter()
        .map(|(sid, idx)| {
            let x = codes.x.select(Axis(0), idx);
            let z = codes.z.select(Axis(0), idx);
            atom_contributions(&pooled_from(model, *sid, &x.view(), &z.view()), model)
        })
        .collect()
}

pub fn corpus_contributions(
    model: &DictModel,
    corpus: &Corpus,
    order: NormalizationOrder,
) -> Result<AttributionReport, AttributionError> {
    let codes = word_codes(model, corpus)?;
    let reports = sentence_reports(model, corpus, &codes);
    if reports.is_empty() {
        return Err(AttributionError::EmptyCorpus);
    }
    Ok(aggregate(&reports, model.k(), order))
}

fn aggregate(reports: &[AttributionReport], k: usize, order: NormalizationOrder) -> AttributionReport {
    let n = reports.len() as f64;
    let mut a = vec![0.0; k];
    for r in reports {
        for (acc, v) in a.iter_mut().zip(&r.a) {
            *acc += v / n;
        }
    }
    let (a_norm, skipped) = match order {
        NormalizationOrder::AverageThenNormalize => (normalize(&a), 0),
        NormalizationOrder::NormalizeThenAverage => {
            let valid: Vec<&Vec<f64>> = reports.iter().filter_map(|r| r.a_norm.as_ref()).collect();
            let skipped = reports.len() - valid.len();
            if valid.is_empty() {
                (None, skipped)
            } else {
                let m = valid.len() as f64;
                let mut mean = vec![0.0; k];
                for v in valid {
                    for (acc, x) in mean.iter_mut().zip(v) {
                        *acc += x / m;
                    }
                }
                (Some(mean), skipped)
            }
        }
    };
    AttributionReport {
        scope: Scope::Corpus,
        a,
        a_norm,
        n_sentences: reports.len(),
        skipped,
    }
}

/// Per-atom mean and population variance of `z` over word tokens.
pub fn atom_stats(model: &DictModel, corpus: &Corpus) -> Result<Vec<AtomStat>, AttributionError> {
    let codes = word_codes(model, corpus)?;
    Ok(stats_from_codes(&codes.z.view()))
}

fn stats_from_codes(z: &ArrayView2<f64>) -> Vec<AtomStat> {
    let n = z.nrows().max(1) as f64;
    z.columns()
        .into_iter()
        .enumerate()
        .map(|(atom, col)| {
            let mean = col.sum() / n;
            let variance = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            AtomStat { atom, mean, variance }
        })
        .collect()
}

/// `π_jc`: share of atom `j`'s absolute activation mass on tokens of class
/// `c`. Returns the matrix and the atoms with zero mass.
pub fn class_fractions(model: &DictModel, corpus: &Corpus, kind: LabelKind) -> Result<(Array2<f64>, Vec<usize>), AttributionError> {
    let codes = word_codes(model, corpus)?;
    let labels: Vec<usize> = codes.rows.iter().map(|&t| corpus.labels(kind)[t]).collect();
    Ok(fractions_from_codes(&codes.z.view(), &labels, corpus.vocab(kind).len()))
}

fn fractions_from_codes(z: &ArrayView2<f64>, labels: &[usize], n_classes: usize) -> (Array2<f64>, Vec<usize>) {
    let k = z.ncols();
    let mut pi = Array2::<f64>::zeros((k, n_classes));
    for (row, &c) in z.rows().into_iter().zip(labels) {
        for j in 0..k {
            pi[[j, c]] += row[j].abs();
        }
    }
    let mut inactive = Vec::new();
    for (j, mut row) in pi.rows_mut().into_iter().enumerate() {
        let total = row.sum();
        if total > 0.0 {
            row /= total;
        } else {
            inactive.push(j);
        }
    }
    (pi, inactive)
}

pub fn class_attribution(
    model: &DictModel,
    corpus: &Corpus,
    kind: LabelKind,
    order: NormalizationOrder,
) -> Result<ClassAttribution, AttributionError> {
    let codes = word_codes(model, corpus)?;
    let all_labels = corpus.labels(kind);
    let labels: Vec<usize> = codes.rows.iter().map(|&t| all_labels[t]).collect();
    let (pi, inactive_atoms) = fractions_from_codes(&codes.z.view(), &labels, corpus.vocab(kind).len());
    let reports = sentence_reports(model, corpus, &codes);
    if reports.is_empty() {
        return Err(AttributionError::EmptyCorpus);
    }
    let report = aggregate(&reports, model.k(), order);
    let a_norm = report
        .a_norm
        .ok_or_else(|| AttributionError::Degenerate(report.a.iter().sum()))?;
    let (shares, raw_shares) = shares_from(&pi, &a_norm, &report.a)?;
    Ok(ClassAttribution {
        kind,
        classes: corpus.vocab(kind).to_vec(),
        shares,
        raw_shares,
        pi,
        inactive_atoms,
    })
}

fn shares_from(pi: &Array2<f64>, a_norm: &[f64], a: &[f64]) -> Result<(Vec<f64>, Vec<f64>), AttributionError> {
    let shares = pi.t().dot(&Array1::from(a_norm.to_vec()));
    let total = shares.sum();
    if total.abs() <= DEGENERATE_SUM {
        return Err(AttributionError::Degenerate(total));
    }
    let raw = pi.t().dot(&Array1::from(a.to_vec()));
    Ok(((shares / total).to_vec(), raw.to_vec()))
}

pub fn atom_stats_csv(stats: &[AtomStat]) -> String {
    to_csv(
        &["atom", "mean", "variance"],
        stats
            .iter()
            .map(|s| vec![s.atom.to_string(), s.mean.to_string(), s.variance.to_string()]),
    )
}

/// `a_norm` is left empty for degenerate reports.
pub fn atom_contributions_csv(report: &AttributionReport) -> String {
    to_csv(
        &["atom", "a", "a_norm"],
        report.a.iter().enumerate().map(|(j, a)| {
            let norm = report.a_norm.as_ref().map(|n| n[j].to_string()).unwrap_or_default();
            vec![j.to_string(), a.to_string(), norm]
        }),
    )
}

pub fn class_attribution_csv(attr: &ClassAttribution) -> String {
    to_csv(
        &["class", "share"],
        attr.classes.iter().zip(&attr.shares).map(|(c, s)| vec![c.clone(), s.to_string()]),
    )
}
