use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use super::model::DictModel;
use super::train::as_f64;
use super::DictError;
use crate::corpus::Corpus;
use crate::numkit::cosine;
use crate::LabelKind;

/// How many of a token's strongest activations count as "firing" for label
/// assignment.
pub const TOP_ACTIVATIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomLabel {
    pub atom: usize,
    pub label: usize,
    pub confidence: f64,
    /// Tokens on which the atom was among the top activations.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosDeviation {
    /// `k × |POS|`, mean activation per class minus the atom's global mean.
    pub matrix: Array2<f64>,
    /// Relative frequency of each POS class among the tokens.
    pub class_freq: Vec<f64>,
    /// POS classes with no tokens; their columns are zero.
    pub absent: Vec<usize>,
}

fn full_codes(model: &DictModel, corpus: &Corpus) -> Result<Array2<f64>, DictError> {
    model.codes(&as_f64(&corpus.contextual).view())
}

/// For every atom, the label it most often co-occurs with among the tokens
/// where it is one of the `TOP_ACTIVATIONS` largest nonzero activations.
pub fn atom_label_assignment(model: &DictModel, corpus: &Corpus, kind: LabelKind) -> Result<Vec<AtomLabel>, DictError> {
    let z = full_codes(model, corpus)?;
    Ok(label_assignment_from_codes(&z.view(), &corpus.labels(kind), corpus.vocab(kind).len()))
}

pub(crate) fn label_assignment_from_codes(z: &ArrayView2<f64>, labels: &[usize], n_labels: usize) -> Vec<AtomLabel> {
    let k = z.ncols();
    let mut counts = vec![vec![0usize; n_labels]; k];
    let mut order: Vec<usize> = Vec::with_capacity(k);
    for (row, &label) in z.rows().into_iter().zip(labels) {
        order.clear();
        order.extend((0..k).filter(|&j| row[j] != 0.0));
        order.sort_by(|&a, &b| row[b].abs().total_cmp(&row[a].abs()).then(a.cmp(&b)));
        for &j in order.iter().take(TOP_ACTIVATIONS) {
            counts[j][label] += 1;
        }
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(atom, c)| {
            let support: usize = c.iter().sum();
            let (label, best) = c
                .iter()
                .enumerate()
                .fold((0, 0), |acc, (i, &n)| if n > acc.1 { (i, n) } else { acc });
            AtomLabel {
                atom,
                label,
                confidence: if support == 0 { 0.0 } else { best as f64 / support as f64 },
                support,
            }
        })
        .collect()
}

pub fn atom_pos_deviation(model: &DictModel, corpus: &Corpus) -> Result<PosDeviation, DictError> {
    let z = full_codes(model, corpus)?;
    Ok(deviation_from_codes(&z.view(), &corpus.labels(LabelKind::Pos), corpus.pos_vocab.len()))
}

pub(crate) fn deviation_from_codes(z: &ArrayView2<f64>, labels: &[usize], n_classes: usize) -> PosDeviation {
    let (n, k) = z.dim();
    let mut sums = Array2::<f64>::zeros((k, n_classes));
    let mut counts = vec![0usize; n_classes];
    for (row, &c) in z.rows().into_iter().zip(labels) {
        counts[c] += 1;
        for j in 0..k {
            sums[[j, c]] += row[j];
        }
    }
    let global: Vec<f64> = (0..k).map(|j| sums.row(j).sum() / n.max(1) as f64).collect();
    let mut matrix = Array2::zeros((k, n_classes));
    for c in 0..n_classes {
        if counts[c] == 0 {
            continue;
        }
        for j in 0..k {
            matrix[[j, c]] = sums[[j, c]] / counts[c] as f64 - global[j];
        }
    }
    PosDeviation {
        matrix,
        class_freq: counts.iter().map(|&m| m as f64 / n.max(1) as f64).collect(),
        absent: (0..n_classes).filter(|&c| counts[c] == 0).collect(),
    }
}

/// Cosine similarity between every pair of atoms.
pub fn atom_orthogonality(model: &DictModel) -> Result<Array2<f64>, DictError> {
    let dict = model.dictionary();
    let k = dict.ncols();
    if let Some(j) = model.atom_norms().iter().position(|n| *n <= 0.0 || !n.is_finite()) {
        return Err(DictError::ZeroNormAtom(j));
    }
    let cols: Vec<Vec<f64>> = (0..k).map(|j| dict.column(j).to_vec()).collect();
    let mut out = Array2::<f64>::eye(k);
    for a in 0..k {
        for b in a + 1..k {
            let c = cosine(&cols[a], &cols[b]);
            out[[a, b]] = c;
            out[[b, a]] = c;
        }
    }
    Ok(out)
}

/// For each learned atom, the reference atom with the largest absolute
/// cosine and that cosine.
pub fn nearest_atoms(model: &DictModel, reference: &ArrayView2<f64>) -> Result<Vec<(usize, f64)>, DictError> {
    let dict = model.dictionary();
    if reference.nrows() != dict.nrows() {
        return Err(DictError::Shape(format!(
            "reference atoms have {} dimensions, model {}",
            reference.nrows(),
            dict.nrows()
        )));
    }
    let refs: Vec<Vec<f64>> = reference.columns().into_iter().map(|c| c.to_vec()).collect();
    Ok(dict
        .columns()
        .into_iter()
        .map(|col| {
            let col = col.to_vec();
            refs.iter()
                .enumerate()
                .map(|(i, r)| (i, cosine(&col, r).abs()))
                .fold((0, -1.0), |acc, (i, c)| if c > acc.1 { (i, c) } else { acc })
        })
        .collect())
}
