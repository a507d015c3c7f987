use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = r#"
corpus_path = "corpus"
output_dir = "out"
seed = 21

[synth]
n_sentences = 120
"#;

const DICT: &str = r#"
[dict]
k = 16
epochs = 2
batch_size = 32
topk = 3
encoder_bias = false
"#;

fn sentdecomp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sentdecomp"))
        .arg("--config")
        .arg(dir.join("cfg.toml"))
        .args(args)
        .env_remove("SENTDECOMP_SEED")
        .env_remove("SENTDECOMP_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn setup(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.toml"), config).unwrap();
    dir
}

fn error_record(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {stderr}"))
}

#[test]
fn stages_write_expected_artifacts() {
    let dir = setup(&format!("{BASE}{DICT}"));
    assert!(sentdecomp(dir.path(), &["synth"]).status.success());
    assert!(dir.path().join("corpus/manifest.json").is_file());
    assert!(dir.path().join("corpus/ground_truth.json").is_file());

    let out = sentdecomp(dir.path(), &["validate"]);
    assert!(out.status.success());
    let info: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(info["num_sentences"], 120);

    assert!(sentdecomp(dir.path(), &["dict-train"]).status.success());
    for f in ["model/model.json", "train_history.csv", "dict_metrics.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    assert!(sentdecomp(dir.path(), &["pool-analyze"]).status.success());
    assert!(sentdecomp(dir.path(), &["attribute"]).status.success());
    let shares = std::fs::read_to_string(dir.path().join("out/class_attribution_pos.csv")).unwrap();
    assert_eq!(shares.lines().count(), 1 + 8);
    assert!(sentdecomp(dir.path(), &["report"]).status.success());
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert!(summary.get("dict").is_some() && summary.get("attribution").is_some());
    assert!(summary.get("probes").is_none());
}

#[test]
fn missing_model_exits_with_artifact_code() {
    let dir = setup(&format!("{BASE}{DICT}"));
    assert!(sentdecomp(dir.path(), &["synth"]).status.success());
    let out = sentdecomp(dir.path(), &["attribute"]);
    assert_eq!(out.status.code(), Some(3));
    let rec = error_record(&out);
    assert_eq!(rec["error"]["kind"], "missing_artifact");
    assert_eq!(rec["error"]["module"], "pooling-attribution");
}

#[test]
fn missing_corpus_exits_with_artifact_code() {
    let dir = setup("corpus_path = \"nowhere\"\noutput_dir = \"out\"\nseed = 1\n");
    assert_eq!(sentdecomp(dir.path(), &["validate"]).status.code(), Some(3));
}

#[test]
fn bad_config_exits_with_config_code() {
    let dir = setup("corpus_path = \"c\"\noutput_dir = \"o\"\nseed = 1\nbogus = 3\n");
    let out = sentdecomp(dir.path(), &["validate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["error"]["kind"], "config");

    let dir = setup(BASE);
    assert_eq!(sentdecomp(dir.path(), &["dict-train"]).status.code(), Some(2));
}

#[test]
fn seed_and_output_can_be_overridden() {
    let dir = setup(&format!("{BASE}{DICT}"));
    assert!(sentdecomp(dir.path(), &["synth"]).status.success());
    let alt = dir.path().join("alt");
    let out = Command::new(env!("CARGO_BIN_EXE_sentdecomp"))
        .arg("--config")
        .arg(dir.path().join("cfg.toml"))
        .arg("dict-train")
        .env("SENTDECOMP_OUTPUT_DIR", &alt)
        .env("SENTDECOMP_SEED", "99")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(alt.join("model/model.json").is_file());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn different_seeds_change_the_run() {
    let a = setup(&format!("{BASE}{DICT}"));
    let b = setup(&format!("{BASE}{DICT}").replace("seed = 21", "seed = 22"));
    for d in [&a, &b] {
        assert!(sentdecomp(d.path(), &["all"]).status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("out/summary.json")).unwrap();
    assert_ne!(read(&a), read(&b));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let cfg = sentdecomp_cli::PipelineConfig::load(&path, &Default::default());
        assert!(cfg.is_ok(), "{}: {:?}", path.display(), cfg.err());
    }
}
