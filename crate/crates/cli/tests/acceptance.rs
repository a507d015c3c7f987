//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sentdecomp_core::attribution::{
    atom_contributions, class_attribution, corpus_contributions, pool_rows, pool_sentence, NormalizationOrder,
};
use sentdecomp_core::corpus::{generate_synthetic, split_corpus};
use sentdecomp_core::dictlearn::{
    atom_label_assignment, evaluate, nearest_atoms, train, DictModel, ModelDims, Nonlinearity,
};
use sentdecomp_core::numkit::grad_check;
use sentdecomp_core::probes::{random_baseline, train_probe, ProbeArch, ProbeHyper, ProbeMode, ProbeTarget};
use sentdecomp_core::{Corpus, DictConfig, LabelKind, SplitSpec, SyntheticSpec};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_model(dims: ModelDims, sigma: Nonlinearity, rng: &mut ChaCha8Rng) -> DictModel {
    let mut m = DictModel::zeros(dims, sigma, None);
    for v in m.params_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    m
}

fn gradient_correctness() -> Outcome {
    let cfg = DictConfig {
        alpha_pos: 0.7,
        alpha_dep: 0.4,
        alpha_static: 0.9,
        alpha_sparse: 1.0,
        l1_ctx: 0.3,
        l1_static: 0.2,
        ..Default::default()
    };
    let dims = ModelDims { d: 12, d_static: 6, k: 8, n_pos: 5, n_dep: 3 };
    let mut worst = 0.0f64;
    for i in 0..10u64 {
        let sigma = if i % 2 == 0 { Nonlinearity::Identity } else { Nonlinearity::Relu };
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
        let model = random_model(dims, sigma, &mut rng);
        let x = Array2::from_shape_fn((5, dims.d), |_| rng.random_range(-1.0..1.0));
        let w = Array2::from_shape_fn((5, dims.d_static), |_| rng.random_range(-1.0..1.0));
        let yp: Vec<usize> = (0..5).map(|_| rng.random_range(0..dims.n_pos)).collect();
        let yd: Vec<usize> = (0..5).map(|_| rng.random_range(0..dims.n_dep)).collect();
        let f = |p: &[f64]| {
            let mut m = model.clone();
            m.set_params(p.to_vec()).expect("same length");
            let (terms, grad) = m.loss(&x.view(), &w.view(), &yp, &yd, &cfg, true).expect("finite loss");
            (terms.total, grad.expect("requested"))
        };
        let report = grad_check(f, model.params(), 1e-5).map_err(|e| e.to_string())?;
        worst = worst.max(report.max_rel_err);
    }
    check(worst <= 1e-4, format!("max relative error {worst:.2e} over 10 instances (tol 1e-4)"))
}

fn pooling_identities() -> Outcome {
    let dims = ModelDims { d: 16, d_static: 8, k: 24, n_pos: 4, n_dep: 3 };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let model = random_model(dims, Nonlinearity::Relu, &mut rng);
    let (mut worst_abs, mut worst_rel) = (0.0f64, 0.0f64);
    for sid in 0..100 {
        let n = rng.random_range(1..=20);
        let x = Array2::from_shape_fn((n, dims.d), |_| rng.random_range(-2.0..2.0));
        let pooled = pool_rows(&model, sid, &x.view()).map_err(|e| e.to_string())?;
        let mut mean_recon = vec![0.0; dims.d];
        for row in x.rows() {
            let fwd = model.forward(row.as_slice().expect("contiguous")).map_err(|e| e.to_string())?;
            for (m, v) in mean_recon.iter_mut().zip(&fwd.x_hat) {
                *m += v / n as f64;
            }
        }
        for (a, b) in pooled.s_hat.iter().zip(&mean_recon) {
            worst_abs = worst_abs.max((a - b).abs());
        }
        let report = atom_contributions(&pooled, &model);
        let sum: f64 = report.a.iter().sum();
        let inner: f64 = pooled.s_hat.iter().zip(&pooled.s).map(|(a, b)| a * b).sum();
        worst_rel = worst_rel.max((sum - inner).abs() / inner.abs().max(f64::MIN_POSITIVE));
    }
    check(
        worst_abs <= 1e-6 && worst_rel <= 1e-9,
        format!("|D·mean z − mean D·z| max {worst_abs:.2e} (tol 1e-6), Σa vs ⟨Dz̄,s⟩ rel {worst_rel:.2e} (tol 1e-9)"),
    )
}

fn synthetic_spec() -> SyntheticSpec {
    SyntheticSpec {
        k: 32,
        d: 64,
        n_sentences: 2000,
        tokens_per_sentence: 8,
        active_atoms: 3,
        noise_std: 0.01,
        seed: 7,
        ..Default::default()
    }
}

fn recovery_config() -> DictConfig {
    DictConfig {
        k: 32,
        nonlinearity: Nonlinearity::Identity,
        epochs: 30,
        lr: 3e-3,
        batch_size: 32,
        topk: Some(3),
        l1_ctx: 1e-2,
        l1_static: 1e-2,
        encoder_bias: false,
        seed: 1,
        ..Default::default()
    }
}

struct Synthetic {
    train: Corpus,
    val: Corpus,
    full: Corpus,
    model: DictModel,
}

fn synthetic_recovery() -> (Outcome, Option<Synthetic>) {
    let run = || -> Result<(String, bool, Synthetic), String> {
        let start = Instant::now();
        let (corpus, truth) = generate_synthetic(&synthetic_spec()).map_err(|e| e.to_string())?;
        let (tr, va, _) = split_corpus(&corpus, &SplitSpec { seed: 3, ..Default::default() }).map_err(|e| e.to_string())?;
        let (model, _) = train(&tr, &va, &recovery_config()).map_err(|e| e.to_string())?;
        let metrics = evaluate(&model, &va).map_err(|e| e.to_string())?;
        let labels = atom_label_assignment(&model, &va, LabelKind::Pos).map_err(|e| e.to_string())?;
        let nearest = nearest_atoms(&model, &truth.dictionary.view()).map_err(|e| e.to_string())?;
        let recovered = labels
            .iter()
            .zip(&nearest)
            .filter(|(l, (g, _))| l.label == truth.atom_label(*g) && l.confidence >= 0.9)
            .count();
        let frac = recovered as f64 / labels.len() as f64;
        let ok = metrics.val_recon <= 0.01 && metrics.f1_pos >= 0.95 && frac >= 0.8;
        let detail = format!(
            "val_recon {:.2e} (≤ 0.01), f1_pos {:.4} (≥ 0.95), labels recovered {recovered}/{} = {frac:.3} (≥ 0.8), {:.1}s",
            metrics.val_recon,
            metrics.f1_pos,
            labels.len(),
            start.elapsed().as_secs_f64()
        );
        Ok((detail, ok, Synthetic { train: tr, val: va, full: corpus, model }))
    };
    match run() {
        Ok((detail, ok, syn)) => (check(ok, detail), Some(syn)),
        Err(e) => (Err(e), None),
    }
}

/// Shuffled probes on well-separated clusters still map each cluster to
/// whichever label its shuffled sample happens to favour, so single runs
/// scatter around chance by about ±0.1. The check uses the mean over seeds
/// and reports the single-run spread.
const SHUFFLED_SEEDS: u64 = 20;

fn probe_sanity(syn: &Synthetic) -> Outcome {
    use rayon::prelude::*;

    let hyper = ProbeHyper::default();
    let target = ProbeTarget::Pos;
    let chance = 1.0 / syn.full.pos_vocab.len() as f64;
    let probe = |arch, mode, seed| {
        train_probe(&syn.train, &syn.val, target, arch, &hyper, mode, seed)
            .map(|(_, m)| m.accuracy)
            .map_err(|e| e.to_string())
    };
    let linear = probe(ProbeArch::Linear, ProbeMode::Standard, 11)?;
    let mlp = probe(ProbeArch::Mlp, ProbeMode::Standard, 12)?;
    let random = random_baseline(&syn.val, target, 14).map_err(|e| e.to_string())?.accuracy;

    let mut ok = linear >= 0.99 && (random - chance).abs() <= 0.05 && mlp >= linear - 0.02;
    let mut shuffled_detail = Vec::new();
    for arch in [ProbeArch::Linear, ProbeArch::Mlp] {
        let accs: Vec<f64> = (0..SHUFFLED_SEEDS)
            .into_par_iter()
            .map(|s| probe(arch, ProbeMode::Shuffled, 100 + s))
            .collect::<Result<_, _>>()?;
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        let min = accs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = accs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let within = accs.iter().filter(|a| (**a - chance).abs() <= 0.05).count();
        ok &= (mean - chance).abs() <= 0.05;
        shuffled_detail.push(format!(
            "shuffled {arch} mean {mean:.4} over {SHUFFLED_SEEDS} seeds (single runs {min:.3}..{max:.3}, {within}/{SHUFFLED_SEEDS} within ±0.05)"
        ));
    }
    check(
        ok,
        format!(
            "linear {linear:.4} (≥ 0.99), mlp {mlp:.4} (≥ linear − 0.02), random {random:.4}, {} (chance {chance:.3} ± 0.05)",
            shuffled_detail.join(", ")
        ),
    )
}

fn attribution_algebra(syn: &Synthetic) -> Outcome {
    let model = &syn.model;
    let corpus = &syn.val;
    let mut worst_norm = 0.0f64;
    let mut worst_scale = 0.0f64;
    let mut degenerate = 0;
    for span in corpus.sentences() {
        let pooled = pool_sentence(model, corpus, span.sentence_id).map_err(|e| e.to_string())?;
        let Some(a_norm) = atom_contributions(&pooled, model).a_norm else {
            degenerate += 1;
            continue;
        };
        worst_norm = worst_norm.max((a_norm.iter().sum::<f64>() - 1.0).abs());
        let x = corpus
            .contextual
            .select(Axis(0), &span.rows.clone().collect::<Vec<_>>())
            .mapv(|v| 2.0 * v as f64);
        let scaled = pool_rows(model, span.sentence_id, &x.view()).map_err(|e| e.to_string())?;
        let scaled_norm = atom_contributions(&scaled, model).a_norm.ok_or("scaled sentence degenerate")?;
        for (a, b) in a_norm.iter().zip(&scaled_norm) {
            worst_scale = worst_scale.max((a - b).abs());
        }
    }
    for order in [NormalizationOrder::AverageThenNormalize, NormalizationOrder::NormalizeThenAverage] {
        let report = corpus_contributions(model, corpus, order).map_err(|e| e.to_string())?;
        let a_norm = report.a_norm.ok_or("corpus report degenerate")?;
        worst_norm = worst_norm.max((a_norm.iter().sum::<f64>() - 1.0).abs());
    }
    let (mut worst_pi, mut worst_share) = (0.0f64, 0.0f64);
    for kind in [LabelKind::Pos, LabelKind::Dep] {
        let attr = class_attribution(model, corpus, kind, NormalizationOrder::default()).map_err(|e| e.to_string())?;
        for (j, row) in attr.pi.rows().into_iter().enumerate() {
            if !attr.inactive_atoms.contains(&j) {
                worst_pi = worst_pi.max((row.sum() - 1.0).abs());
            }
        }
        worst_share = worst_share.max((attr.shares.iter().sum::<f64>() - 1.0).abs());
    }
    let ok = worst_norm <= 1e-6 && worst_pi <= 1e-6 && worst_share <= 1e-6 && worst_scale <= 1e-6;
    check(
        ok,
        format!(
            "|Σa_norm − 1| {worst_norm:.1e}, |Σπ_j − 1| {worst_pi:.1e}, |Σshares − 1| {worst_share:.1e}, \
             scale-by-2 drift {worst_scale:.1e} (all ≤ 1e-6; {degenerate} degenerate sentences)"
        ),
    )
}

const PIPELINE_CONFIG: &str = r#"
corpus_path = "corpus"
output_dir = "out"
seed = 5

[synth]
n_sentences = 400

[probe]
[probe.hyper]
max_epochs = 10

[dict]
k = 32
epochs = 5
batch_size = 32
lr = 3e-3
topk = 3
encoder_bias = false

[sweep]
n_trials = 3
[sweep.search_space]
epochs = 3

[attribution]
"#;

fn run_pipeline(dir: &Path) -> Result<Vec<u8>, String> {
    let config = dir.join("pipeline.toml");
    std::fs::write(&config, PIPELINE_CONFIG).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_sentdecomp"))
        .arg("--config")
        .arg(&config)
        .arg("all")
        .env_remove("SENTDECOMP_SEED")
        .env_remove("SENTDECOMP_OUTPUT_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    std::fs::read(dir.join("out/summary.json")).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run_pipeline(a.path())?;
    let second = run_pipeline(b.path())?;
    check(first == second, format!("summary.json {} bytes, identical: {}", first.len(), first == second))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("gradient correctness", gradient_correctness()));
    results.push(("pooling identities", pooling_identities()));
    let (recovery, syn) = synthetic_recovery();
    results.push(("synthetic recovery", recovery));
    match &syn {
        Some(syn) => {
            results.push(("probe sanity", probe_sanity(syn)));
            results.push(("attribution algebra", attribution_algebra(syn)));
        }
        None => {
            results.push(("probe sanity", Err("synthetic corpus unavailable".into())));
            results.push(("attribution algebra", Err("synthetic model unavailable".into())));
        }
    }
    results.push(("determinism", determinism()));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
