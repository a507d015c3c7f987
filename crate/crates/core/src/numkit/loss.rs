use super::NumError;

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&l| l - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

/// Softmax cross-entropy and its gradient with respect to the logits.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>), NumError> {
    if label >= logits.len() {
        return Err(NumError::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(NumError::NonFinite("logits"));
    }
    let logp = log_softmax(logits);
    let loss = -logp[label];
    let mut grad: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::grad_check;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_logits_give_log_c() {
        let (loss, grad) = cross_entropy(&[0.3; 4], 2).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
        assert!((grad[2] + 0.75).abs() < 1e-12);
        assert!((grad[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let (loss, grad) = cross_entropy(&[1000.0, 0.0], 0).unwrap();
        assert!(loss.is_finite() && loss < 1e-300 + 1e-12);
        assert!(grad.iter().all(|g| g.is_finite()));
        let (loss, _) = cross_entropy(&[1000.0, 0.0], 1).unwrap();
        assert!((loss - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn label_out_of_range() {
        assert_eq!(
            cross_entropy(&[0.0, 1.0], 2),
            Err(NumError::LabelOutOfRange { label: 2, classes: 2 })
        );
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let c = 2 + trial % 6;
            let logits: Vec<f64> = (0..c).map(|_| rng.random_range(-3.0..3.0)).collect();
            let label = rng.random_range(0..c);
            let report = grad_check(
                |x: &[f64]| cross_entropy(x, label).unwrap(),
                &logits,
                1e-5,
            )
            .unwrap();
            assert!(report.max_rel_err <= 1e-5, "trial {trial}: {report:?}");
        }
    }
}
