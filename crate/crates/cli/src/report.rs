//! `summary.json`: a digest of whatever artifacts exist in the output
//! directory. It holds no paths or timestamps so identical runs produce
//! identical bytes.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::CliError;

pub const SUMMARY_FILE: &str = "summary.json";

fn read_json(path: &Path) -> Result<Option<Value>, CliError> {
    if !path.is_file() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::InvalidArtifact(format!("{}: {e}", path.display())))
}

fn probe_rows(path: &Path) -> Result<Option<Value>, CliError> {
    if !path.is_file() {
        return Ok(None);
    }
    let invalid = |e: csv::Error| CliError::InvalidArtifact(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(invalid)?;
    let header = reader.headers().map_err(invalid)?.clone();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(invalid)?;
        let mut row = Map::new();
        for (name, cell) in header.iter().zip(record.iter()) {
            if name == "model_name" {
                continue;
            }
            let value = match cell.parse::<f64>() {
                Ok(v) if name != "seed" => json!(v),
                _ => json!(cell),
            };
            row.insert(name.to_string(), value);
        }
        rows.push(Value::Object(row));
    }
    Ok(Some(Value::Array(rows)))
}

pub fn build_summary(dir: &Path) -> Result<Value, CliError> {
    let mut out = Map::new();
    if let Some(p) = probe_rows(&dir.join("probe_results.csv"))? {
        out.insert("probes".into(), p);
    }
    if let Some(d) = read_json(&dir.join("dict_metrics.json"))? {
        out.insert("dict".into(), d);
    }
    if let Some(best) = read_json(&dir.join("sweep_best.json"))? {
        out.insert(
            "sweep_best".into(),
            json!({ "index": best["index"], "metrics": best["metrics"] }),
        );
    }
    if let Some(pool) = read_json(&dir.join("pool_analysis.json"))? {
        out.insert("pool".into(), pool);
    }
    let mut attribution = Map::new();
    for kind in ["pos", "dep"] {
        if let Some(a) = read_json(&dir.join(format!("class_attribution_{kind}.json")))? {
            let classes = a["classes"].as_array().cloned().unwrap_or_default();
            let shares = a["shares"].as_array().cloned().unwrap_or_default();
            let mut by_class = Map::new();
            for (c, s) in classes.iter().zip(shares) {
                by_class.insert(c.as_str().unwrap_or_default().to_string(), s);
            }
            attribution.insert(kind.into(), Value::Object(by_class));
        }
    }
    if !attribution.is_empty() {
        out.insert("attribution".into(), Value::Object(attribution));
    }
    if out.is_empty() {
        return Err(CliError::MissingArtifact {
            path: dir.to_path_buf(),
            hint: "no stage artifacts to summarize".into(),
        });
    }
    Ok(Value::Object(out))
}
