use std::fmt;
use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RunMode, SegmentReport};
use crate::complexity::FEATURE_CSV_HEADER;
use crate::error::{Error, Result};

pub const SEGMENTS_CSV: &str = "segments.csv";
pub const DECISIONS_CSV: &str = "decisions.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const SUMMARY_CSV: &str = "summary.csv";

/// One row of `decisions.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub segment_id: String,
    pub mode: RunMode,
    pub rung: usize,
    pub width: u32,
    pub bitrate_kbps: f64,
    pub preset: u8,
    pub predicted_time: Option<f64>,
    pub deadline_met: Option<bool>,
    pub margin: Option<f64>,
    pub deadline: f64,
    pub wall_time: f64,
    pub idle_time: f64,
    pub status: String,
    pub output_bytes: u64,
    pub achieved_kbps: Option<f64>,
    pub psnr: Option<f64>,
}

impl DecisionRecord {
    pub fn from_report(report: &SegmentReport) -> Vec<DecisionRecord> {
        report
            .rungs
            .iter()
            .map(|r| DecisionRecord {
                segment_id: report.segment_id.clone(),
                mode: report.mode,
                rung: r.rung,
                width: r.representation.width,
                bitrate_kbps: r.representation.bitrate_kbps,
                preset: r.preset,
                predicted_time: r.decision.map(|d| d.predicted_time),
                deadline_met: r.decision.map(|d| d.deadline_met),
                margin: r.decision.map(|d| d.margin),
                deadline: report.deadline_seconds,
                wall_time: r.result.wall_time,
                idle_time: r.idle_time,
                status: r.result.status.label().to_string(),
                output_bytes: r.result.output_bytes,
                achieved_kbps: r.result.achieved_kbps,
                psnr: r.result.psnr,
            })
            .collect()
    }

    pub fn succeeded(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungSummary {
    pub rung: usize,
    pub width: u32,
    pub bitrate_kbps: f64,
    pub mean_preset: f64,
    pub mean_wall_time: f64,
    pub mean_idle_time: f64,
    pub violation_rate: f64,
    pub mean_psnr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub segments: usize,
    pub rungs: Vec<RungSummary>,
    pub total_idle_time: f64,
    pub total_violations: usize,
    pub total_failures: usize,
    pub segments_over_latency_budget: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Per-rung averages over `reports`, which must all use the same ladder.
pub fn summarize(reports: &[SegmentReport]) -> Summary {
    let n_rungs = reports.first().map_or(0, |r| r.rungs.len());
    let rungs = (0..n_rungs)
        .map(|i| {
            let at = || reports.iter().filter_map(move |r| r.rungs.get(i));
            let first = &reports[0].rungs[i];
            let count = at().count().max(1) as f64;
            RungSummary {
                rung: first.rung,
                width: first.representation.width,
                bitrate_kbps: first.representation.bitrate_kbps,
                mean_preset: mean(at().map(|r| f64::from(r.preset))).unwrap_or(0.0),
                mean_wall_time: mean(at().map(|r| r.result.wall_time)).unwrap_or(0.0),
                mean_idle_time: mean(at().map(|r| r.idle_time)).unwrap_or(0.0),
                violation_rate: at()
                    .zip(reports)
                    .filter(|(r, seg)| r.result.wall_time > seg.deadline_seconds)
                    .count() as f64
                    / count,
                mean_psnr: mean(at().filter_map(|r| r.result.psnr)),
            }
        })
        .collect();
    Summary {
        segments: reports.len(),
        rungs,
        total_idle_time: reports.iter().map(SegmentReport::total_idle).sum(),
        total_violations: reports.iter().map(|r| r.violations).sum(),
        total_failures: reports.iter().map(|r| r.failures).sum(),
        segments_over_latency_budget: reports.iter().filter(|r| r.latency_over_budget).count(),
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "segments: {}", self.segments)?;
        writeln!(
            f,
            "{:>4} {:>6} {:>9} {:>7} {:>9} {:>9} {:>9} {:>8}",
            "rung", "width", "kbps", "preset", "time_s", "idle_s", "viol_%", "psnr"
        )?;
        for r in &self.rungs {
            let psnr = r.mean_psnr.map_or_else(|| "-".to_string(), |p| format!("{p:.2}"));
            writeln!(
                f,
                "{:>4} {:>6} {:>9.0} {:>7.2} {:>9.3} {:>9.3} {:>9.1} {:>8}",
                r.rung,
                r.width,
                r.bitrate_kbps,
                r.mean_preset,
                r.mean_wall_time,
                r.mean_idle_time,
                100.0 * r.violation_rate,
                psnr
            )?;
        }
        writeln!(f, "total idle time: {:.3} s", self.total_idle_time)?;
        writeln!(f, "deadline violations: {}", self.total_violations)?;
        writeln!(f, "failed encodes: {}", self.total_failures)?;
        writeln!(f, "segments over latency budget: {}", self.segments_over_latency_budget)
    }
}

/// Writes `segments.csv`, `decisions.csv`, `summary.csv` and `summary.txt`.
pub fn write_run(dir: &Path, reports: &[SegmentReport]) -> Result<Summary> {
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;

    let path = dir.join(SEGMENTS_CSV);
    let mut seg = File::create(&path).map_err(|e| Error::file(&path, e))?;
    writeln!(seg, "{FEATURE_CSV_HEADER}")?;
    for r in reports {
        writeln!(
            seg,
            "{}",
            r.features.csv_line(&r.segment_id, r.source_width, r.source_height)
        )?;
    }

    let mut decisions = csv::Writer::from_path(dir.join(DECISIONS_CSV))?;
    for r in reports {
        for rec in DecisionRecord::from_report(r) {
            decisions.serialize(rec)?;
        }
    }
    decisions.flush()?;

    let summary = summarize(reports);
    let mut table = csv::Writer::from_path(dir.join(SUMMARY_CSV))?;
    for r in &summary.rungs {
        table.serialize(r)?;
    }
    table.flush()?;
    let path = dir.join(SUMMARY_TXT);
    fs::write(&path, format!("{summary}\n")).map_err(|e| Error::file(&path, e))?;
    Ok(summary)
}

pub fn read_decisions(dir: &Path) -> Result<Vec<DecisionRecord>> {
    let path = dir.join(DECISIONS_CSV);
    let mut reader = csv::Reader::from_path(&path)?;
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}
