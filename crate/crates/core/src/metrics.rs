//! Classification metrics shared by probes and dictionary heads.

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationScores {
    pub accuracy: f64,
    /// Mean F1 over the classes that occur in the true labels.
    pub macro_f1: f64,
    /// F1 per class index; 0 for classes absent from both truth and predictions.
    pub per_class_f1: Vec<f64>,
}

pub fn classification_scores(truth: &[usize], pred: &[usize], n_classes: usize) -> ClassificationScores {
    assert_eq!(truth.len(), pred.len());
    if truth.is_empty() {
        return ClassificationScores {
            accuracy: 0.0,
            macro_f1: 0.0,
            per_class_f1: vec![0.0; n_classes],
        };
    }
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    let mut correct = 0usize;
    for (&t, &p) in truth.iter().zip(pred) {
        if t == p {
            tp[t] += 1;
            correct += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let per_class_f1: Vec<f64> = (0..n_classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fn_[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .collect();
    let present: Vec<usize> = (0..n_classes).filter(|&c| tp[c] + fn_[c] > 0).collect();
    let macro_f1 = present.iter().map(|&c| per_class_f1[c]).sum::<f64>() / present.len() as f64;
    ClassificationScores {
        accuracy: correct as f64 / truth.len() as f64,
        macro_f1,
        per_class_f1,
    }
}
