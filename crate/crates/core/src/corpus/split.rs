use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError};

/// Sentence-level train / validation / test proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.8,
            val_frac: 0.1,
            test_frac: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    /// Sentence counts for `(train, val, test)` out of `n`.
    pub fn counts(&self, n: usize) -> Result<(usize, usize, usize), CorpusError> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !f.is_finite() || *f < 0.0 || *f >= 1.0) {
            return Err(CorpusError::Split(format!(
                "fractions must lie in [0, 1), got {fracs:?}"
            )));
        }
        if self.train_frac == 0.0 {
            return Err(CorpusError::Split("train fraction must be positive".into()));
        }
        if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(CorpusError::Split(format!("fractions sum to {}, not 1", fracs.iter().sum::<f64>())));
        }
        if n < 3 {
            return Err(CorpusError::Split(format!("need at least 3 sentences, corpus has {n}")));
        }
        let share = |f: f64| -> usize {
            if f == 0.0 {
                0
            } else {
                ((f * n as f64).round() as usize).max(1)
            }
        };
        let n_val = share(self.val_frac);
        let n_test = share(self.test_frac);
        if n_val + n_test >= n {
            return Err(CorpusError::Split(format!(
                "{n} sentences leave no training data with fractions {fracs:?}"
            )));
        }
        Ok((n - n_val - n_test, n_val, n_test))
    }
}

/// Shuffles whole sentences with `spec.seed` and partitions them.
pub fn split_corpus(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus, Corpus), CorpusError> {
    let mut ids: Vec<usize> = corpus.sentences().iter().map(|s| s.sentence_id).collect();
    let (n_train, n_val, _) = spec.counts(ids.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    ids.shuffle(&mut rng);
    let train = corpus.select_sentences(&ids[..n_train]);
    let val = corpus.select_sentences(&ids[n_train..n_train + n_val]);
    let test = corpus.select_sentences(&ids[n_train + n_val..]);
    Ok((train, val, test))
}
