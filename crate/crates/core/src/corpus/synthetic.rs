//! Synthetic corpora generated from a known sparse dictionary.
//!
//! Each token is `x = D* z* + noise` where `z*` has exactly `active_atoms`
//! positive entries. One of them (the dominant atom) carries a coefficient
//! in `[1.0, 1.5)`; the others lie in `[0.1, 0.4)`, so the dominant atom is
//! always the largest-magnitude one. Secondary atoms are drawn first from the
//! dominant atom's label group (atoms sharing `index mod n_pos`), which keeps
//! every active atom of a token consistent with the token's label whenever
//! the group is large enough.
//!
//! Labels: `pos_id = dominant mod n_pos` and
//! `dep_id = (dominant / n_pos) mod n_dep`.
//! The static matrix is `D* z*` with the contextual-only atoms zeroed.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Corpus, CorpusError, TokenRecord};
use crate::tensor_io::{f32_from_le_bytes, write_f64_as_f32};

const MAX_COS: f64 = 0.3;
const ATTEMPTS_PER_ATOM: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub k: usize,
    pub d: usize,
    pub n_sentences: usize,
    pub tokens_per_sentence: usize,
    pub active_atoms: usize,
    pub noise_std: f64,
    pub seed: u64,
    pub n_pos: usize,
    pub n_dep: usize,
    /// The last `contextual_only` atoms never reach the static matrix.
    pub contextual_only: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            k: 32,
            d: 64,
            n_sentences: 200,
            tokens_per_sentence: 8,
            active_atoms: 3,
            noise_std: 0.01,
            seed: 0,
            n_pos: 8,
            n_dep: 4,
            contextual_only: 8,
        }
    }
}

/// The generating dictionary and codes of a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `d × k`, unit-norm columns.
    pub dictionary: Array2<f64>,
    /// `T × k` sparse codes.
    pub codes: Array2<f64>,
    pub dominant_atom: Vec<usize>,
    pub contextual_only: Vec<bool>,
    pub n_pos: usize,
}

impl GroundTruth {
    /// POS label an atom was constructed to carry.
    pub fn atom_label(&self, atom: usize) -> usize {
        atom % self.n_pos
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> std::io::Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let meta = serde_json::json!({
            "d": self.dictionary.nrows(),
            "k": self.dictionary.ncols(),
            "num_tokens": self.codes.nrows(),
            "n_pos": self.n_pos,
            "dominant_atom": self.dominant_atom,
            "contextual_only": self.contextual_only,
        });
        fs::write(dir.join("ground_truth.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
        write_f64_as_f32(&dir.join("D_star.f32"), self.dictionary.as_slice().expect("standard layout"))?;
        write_f64_as_f32(&dir.join("codes.f32"), self.codes.as_slice().expect("standard layout"))
    }

    pub fn load(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        let dir = dir.as_ref();
        let bad = |m: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, m.to_string());
        let meta: Value = serde_json::from_slice(&fs::read(dir.join("ground_truth.json"))?)?;
        let get = |k: &str| meta[k].as_u64().map(|v| v as usize).ok_or_else(|| bad(k));
        let (d, k, t, n_pos) = (get("d")?, get("k")?, get("num_tokens")?, get("n_pos")?);
        let read = |name: &str, rows: usize, cols: usize| -> std::io::Result<Array2<f64>> {
            let v = f32_from_le_bytes(&fs::read(dir.join(name))?).ok_or_else(|| bad(name))?;
            Array2::from_shape_vec((rows, cols), v.into_iter().map(f64::from).collect())
                .map_err(|_| bad(name))
        };
        Ok(Self {
            dictionary: read("D_star.f32", d, k)?,
            codes: read("codes.f32", t, k)?,
            dominant_atom: serde_json::from_value(meta["dominant_atom"].clone())?,
            contextual_only: serde_json::from_value(meta["contextual_only"].clone())?,
            n_pos,
        })
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Corpus, GroundTruth), CorpusError> {
    let SyntheticSpec {
        k,
        d,
        n_sentences,
        tokens_per_sentence,
        active_atoms,
        noise_std,
        seed,
        n_pos,
        n_dep,
        contextual_only,
    } = *spec;
    if active_atoms == 0 || active_atoms > k {
        return Err(CorpusError::Synthetic(format!(
            "active_atoms must be in 1..={k}, got {active_atoms}"
        )));
    }
    if d == 0 || k > 4 * d {
        return Err(CorpusError::Synthetic(format!("k = {k} exceeds 4·d = {}", 4 * d)));
    }
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(CorpusError::Synthetic(format!("noise_std must be ≥ 0, got {noise_std}")));
    }
    if n_sentences == 0 || tokens_per_sentence == 0 || n_pos == 0 || n_dep == 0 {
        return Err(CorpusError::Synthetic("counts must be positive".into()));
    }
    if contextual_only > k {
        return Err(CorpusError::Synthetic("contextual_only exceeds k".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dictionary = sample_dictionary(&mut rng, d, k)?;

    let t_total = n_sentences * tokens_per_sentence;
    let mut codes = Array2::<f64>::zeros((t_total, k));
    let mut dominant_atom = Vec::with_capacity(t_total);
    let mut others: Vec<usize> = Vec::with_capacity(k);
    for t in 0..t_total {
        let dom = rng.random_range(0..k);
        codes[[t, dom]] = rng.random_range(1.0..1.5);
        dominant_atom.push(dom);

        let mut group: Vec<usize> = (0..k).filter(|&j| j != dom && j % n_pos == dom % n_pos).collect();
        group.shuffle(&mut rng);
        others.clear();
        others.extend((0..k).filter(|&j| j != dom && j % n_pos != dom % n_pos));
        others.shuffle(&mut rng);
        for &j in group.iter().chain(others.iter()).take(active_atoms - 1) {
            codes[[t, j]] = rng.random_range(0.1..0.4);
        }
    }

    let ctx_only: Vec<bool> = (0..k).map(|j| j >= k - contextual_only).collect();
    let clean = codes.dot(&dictionary.t());
    let mut static_codes = codes.clone();
    for (j, &only) in ctx_only.iter().enumerate() {
        if only {
            static_codes.column_mut(j).fill(0.0);
        }
    }
    let static_clean = static_codes.dot(&dictionary.t());

    let mut contextual = Array2::<f32>::zeros((t_total, d));
    for ((t, i), v) in contextual.indexed_iter_mut() {
        let noise: f64 = if noise_std > 0.0 {
            noise_std * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        *v = (clean[[t, i]] + noise) as f32;
    }
    let static_emb = static_clean.mapv(|v| v as f32);

    let mut tokens = Vec::with_capacity(t_total);
    for s in 0..n_sentences {
        for p in 0..tokens_per_sentence {
            let t = s * tokens_per_sentence + p;
            let dom = dominant_atom[t];
            tokens.push(TokenRecord {
                sentence_id: s,
                position: p,
                word: format!("atom{dom}"),
                pos_id: dom % n_pos,
                dep_id: (dom / n_pos) % n_dep,
            });
        }
    }

    let mut extras = Map::new();
    extras.insert(
        "synthetic".into(),
        serde_json::to_value(spec).expect("spec serializes"),
    );
    let corpus = Corpus {
        tokens,
        contextual,
        static_emb,
        pos_vocab: (0..n_pos).map(|i| format!("POS{i}")).collect(),
        dep_vocab: (0..n_dep).map(|i| format!("DEP{i}")).collect(),
        model_name: "synthetic".into(),
        num_sentences: n_sentences,
        extras,
    };
    corpus.validate()?;
    Ok((
        corpus,
        GroundTruth {
            dictionary,
            codes,
            dominant_atom,
            contextual_only: ctx_only,
            n_pos,
        },
    ))
}

/// Unit-norm Gaussian columns accepted only if every pairwise |cos| ≤ 0.3.
fn sample_dictionary(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Result<Array2<f64>, CorpusError> {
    let mut atoms: Vec<Array1<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut accepted = None;
        for _ in 0..ATTEMPTS_PER_ATOM {
            let v: Array1<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = v.dot(&v).sqrt();
            if norm == 0.0 {
                continue;
            }
            let v = v / norm;
            if atoms.iter().all(|a| a.dot(&v).abs() <= MAX_COS) {
                accepted = Some(v);
                break;
            }
        }
        match accepted {
            Some(v) => atoms.push(v),
            None => {
                return Err(CorpusError::Synthetic(format!(
                    "could not place atom {j} of {k} in {d} dimensions with |cos| ≤ {MAX_COS} \
                     after {ATTEMPTS_PER_ATOM} attempts"
                )))
            }
        }
    }
    let mut dict = Array2::zeros((d, k));
    for (j, a) in atoms.iter().enumerate() {
        dict.column_mut(j).assign(a);
    }
    Ok(dict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_corpus, save_corpus};

    fn small(noise: f64) -> SyntheticSpec {
        SyntheticSpec {
            k: 32,
            d: 64,
            n_sentences: 20,
            tokens_per_sentence: 8,
            active_atoms: 3,
            noise_std: noise,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn dictionary_is_unit_norm_and_near_orthogonal() {
        let (_, gt) = generate_synthetic(&small(0.0)).unwrap();
        let gram = gt.dictionary.t().dot(&gt.dictionary);
        for ((i, j), v) in gram.indexed_iter() {
            if i == j {
                assert!((v - 1.0).abs() < 1e-12);
            } else {
                assert!(v.abs() <= MAX_COS + 1e-12);
            }
        }
    }

    #[test]
    fn noise_free_tokens_reconstruct_exactly() {
        let (c, gt) = generate_synthetic(&small(0.0)).unwrap();
        let recon = gt.codes.dot(&gt.dictionary.t());
        for t in 0..c.num_tokens() {
            let nnz = gt.codes.row(t).iter().filter(|v| **v != 0.0).count();
            assert_eq!(nnz, 3);
            for i in 0..c.dim() {
                // only f32 storage rounding separates the two
                let x = f64::from(c.contextual[[t, i]]);
                assert!((x - recon[[t, i]]).abs() <= 1e-6 * recon[[t, i]].abs().max(1.0));
            }
        }
    }

    #[test]
    fn labels_follow_dominant_atom() {
        let (c, gt) = generate_synthetic(&small(0.01)).unwrap();
        for (t, tok) in c.tokens.iter().enumerate() {
            let row = gt.codes.row(t);
            let argmax = (0..32).max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs())).unwrap();
            assert_eq!(argmax, gt.dominant_atom[t]);
            assert_eq!(tok.pos_id, argmax % 8);
            assert_eq!(tok.dep_id, (argmax / 8) % 4);
        }
    }

    #[test]
    fn static_matrix_drops_contextual_only_atoms() {
        let (c, gt) = generate_synthetic(&small(0.05)).unwrap();
        let mut z = gt.codes.clone();
        for j in 24..32 {
            z.column_mut(j).fill(0.0);
        }
        let expected = z.dot(&gt.dictionary.t());
        for ((t, i), v) in c.static_emb.indexed_iter() {
            assert!((f64::from(*v) - expected[[t, i]]).abs() < 1e-6);
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        save_corpus(&generate_synthetic(&small(0.01)).unwrap().0, a.path()).unwrap();
        save_corpus(&generate_synthetic(&small(0.01)).unwrap().0, b.path()).unwrap();
        for f in ["manifest.json", "tokens.tsv", "contextual.f32", "static.f32"] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        }
        load_corpus(a.path()).unwrap();
    }

    #[test]
    fn infeasible_orthogonality_is_reported() {
        let spec = SyntheticSpec { k: 16, d: 4, active_atoms: 1, contextual_only: 0, ..small(0.0) };
        assert!(matches!(generate_synthetic(&spec), Err(CorpusError::Synthetic(_))));
    }

    #[test]
    fn bad_parameters() {
        assert!(generate_synthetic(&SyntheticSpec { active_atoms: 40, ..small(0.0) }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { noise_std: -1.0, ..small(0.0) }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { k: 300, ..small(0.0) }).is_err());
    }

    #[test]
    fn ground_truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (_, gt) = generate_synthetic(&small(0.0)).unwrap();
        gt.save(dir.path()).unwrap();
        let back = GroundTruth::load(dir.path()).unwrap();
        assert_eq!(back.dominant_atom, gt.dominant_atom);
        assert!((&back.dictionary - &gt.dictionary).iter().all(|v| v.abs() < 1e-7));
    }
}
