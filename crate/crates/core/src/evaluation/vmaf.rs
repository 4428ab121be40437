//! Ingestion of VMAF scores produced by an external tool.
//!
//! Accepted inputs:
//! * CSV with header `segment_id,rung,vmaf`;
//! * JSON array of `{"segment_id", "rung", "vmaf"}` objects;
//! * a directory of libvmaf JSON logs named `<segment_id>__r<rung>.json`,
//!   each read from `pooled_metrics.vmaf.mean`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// `(segment_id, 1-based rung)` → VMAF.
pub type VmafScores = BTreeMap<(String, usize), f64>;

#[derive(Deserialize)]
struct ScoreRow {
    segment_id: String,
    rung: usize,
    vmaf: f64,
}

fn check(score: f64, what: &str) -> Result<f64> {
    if (0.0..=100.0).contains(&score) {
        Ok(score)
    } else {
        Err(Error::Input(format!("{what}: VMAF {score} outside [0, 100]")))
    }
}

pub fn ingest_vmaf(path: &Path) -> Result<VmafScores> {
    if path.is_dir() {
        return ingest_libvmaf_dir(path);
    }
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let rows: Vec<ScoreRow> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text)?
    } else {
        csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<std::result::Result<_, _>>()?
    };
    let mut scores = VmafScores::new();
    for row in rows {
        let what = format!("{} rung {}", row.segment_id, row.rung);
        scores.insert((row.segment_id, row.rung), check(row.vmaf, &what)?);
    }
    Ok(scores)
}

/// Pooled mean VMAF from one libvmaf JSON log.
pub fn libvmaf_mean(text: &str) -> Result<f64> {
    let doc: serde_json::Value = serde_json::from_str(text)?;
    doc.pointer("/pooled_metrics/vmaf/mean")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| Error::Input("libvmaf log lacks pooled_metrics.vmaf.mean".into()))
}

fn ingest_libvmaf_dir(dir: &Path) -> Result<VmafScores> {
    let mut scores = VmafScores::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::file(dir, e))? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let Some((segment, rung)) = stem.rsplit_once("__r") else {
            continue;
        };
        let Ok(rung) = rung.parse::<usize>() else { continue };
        let text = fs::read_to_string(&path).map_err(|e| Error::file(&path, e))?;
        let score = check(libvmaf_mean(&text)?, stem)?;
        scores.insert((segment.to_string(), rung), score);
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("v.csv");
        fs::write(&csv_path, "segment_id,rung,vmaf\nseg0,1,41.5\nseg0,2,55\n").unwrap();
        let s = ingest_vmaf(&csv_path).unwrap();
        assert_eq!(s[&("seg0".to_string(), 2)], 55.0);

        let json_path = dir.path().join("v.json");
        fs::write(&json_path, r#"[{"segment_id":"a","rung":3,"vmaf":88.25}]"#).unwrap();
        assert_eq!(ingest_vmaf(&json_path).unwrap()[&("a".to_string(), 3)], 88.25);
    }

    #[test]
    fn libvmaf_directory() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("seg0001__r12.json"),
            r#"{"version":"2","frames":[],"pooled_metrics":{"vmaf":{"min":80,"max":99,"mean":93.5}}}"#,
        )
        .unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let s = ingest_vmaf(dir.path()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[&("seg0001".to_string(), 12)], 93.5);
    }

    #[test]
    fn out_of_range_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.csv");
        fs::write(&p, "segment_id,rung,vmaf\nseg0,1,101\n").unwrap();
        assert!(matches!(ingest_vmaf(&p), Err(Error::Input(_))));
    }
}
