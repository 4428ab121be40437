use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::bd::{bd_quality, RdCurve, RdPoint};
use super::vmaf::VmafScores;
use crate::error::{Error, Result};
use crate::orchestrator::{read_decisions, DecisionRecord};

pub const BD_REPORT_CSV: &str = "bd_report.csv";
const PER_RUNG_CSV: &str = "per_rung.csv";
const BD_SUMMARY_TXT: &str = "bd_summary.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDelta {
    pub segment_id: String,
    pub bd_psnr: Option<f64>,
    pub bd_vmaf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungComparison {
    pub rung: usize,
    pub width: u32,
    pub bitrate_kbps: f64,
    pub baseline_time: f64,
    pub caps_time: f64,
    pub baseline_idle: f64,
    pub caps_idle: f64,
    pub caps_mean_preset: f64,
    pub baseline_psnr: Option<f64>,
    pub caps_psnr: Option<f64>,
    pub baseline_vmaf: Option<f64>,
    pub caps_vmaf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub segments: Vec<SegmentDelta>,
    /// Uniform mean over segments with a defined BD-PSNR.
    pub mean_bd_psnr: Option<f64>,
    pub mean_bd_vmaf: Option<f64>,
    pub rungs: Vec<RungComparison>,
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        writeln!(f, "segments: {}", self.segments.len())?;
        writeln!(f, "mean BD-PSNR (dB): {}", show(self.mean_bd_psnr))?;
        writeln!(f, "mean BD-VMAF: {}", show(self.mean_bd_vmaf))
    }
}

type Grouped = BTreeMap<String, Vec<DecisionRecord>>;

fn group(records: Vec<DecisionRecord>) -> Grouped {
    let mut out: Grouped = BTreeMap::new();
    for r in records {
        out.entry(r.segment_id.clone()).or_default().push(r);
    }
    for v in out.values_mut() {
        v.sort_by_key(|r| r.rung);
    }
    out
}

fn curve(records: &[DecisionRecord], quality: impl Fn(&DecisionRecord) -> Option<f64>) -> Result<RdCurve> {
    let points = records
        .iter()
        .filter(|r| r.succeeded())
        .filter_map(|r| {
            quality(r).map(|q| RdPoint {
                bitrate_kbps: r.achieved_kbps.unwrap_or(r.bitrate_kbps),
                quality: q,
            })
        })
        .collect();
    RdCurve::from_unsorted(points)
}

fn delta(
    id: &str,
    what: &str,
    base: &[DecisionRecord],
    caps: &[DecisionRecord],
    quality: impl Fn(&DecisionRecord) -> Option<f64> + Copy,
) -> Option<f64> {
    let result = curve(base, quality).and_then(|b| curve(caps, quality).and_then(|c| bd_quality(&b, &c)));
    match result {
        Ok(d) => Some(d),
        Err(e) => {
            warn!("{id}: no {what}: {e}");
            None
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Compares the `decisions.csv` of a baseline run and a CAPS run and writes
/// `bd_report.csv`, `bd_summary.txt`, `per_rung.csv` and SVG charts to `out`.
pub fn evaluate_runs(
    baseline_dir: &Path,
    caps_dir: &Path,
    vmaf_baseline: Option<&VmafScores>,
    vmaf_caps: Option<&VmafScores>,
    out: &Path,
) -> Result<EvaluationReport> {
    let base = group(read_decisions(baseline_dir)?);
    let caps = group(read_decisions(caps_dir)?);
    let common: Vec<&String> = base.keys().filter(|k| caps.contains_key(*k)).collect();
    if common.is_empty() {
        return Err(Error::Evaluation("runs share no segments".into()));
    }

    let vmaf_of = |scores: Option<&VmafScores>, r: &DecisionRecord| {
        scores.and_then(|s| s.get(&(r.segment_id.clone(), r.rung)).copied())
    };
    let mut segments = Vec::new();
    for id in &common {
        let (b, c) = (&base[*id], &caps[*id]);
        let bd_psnr = delta(id, "BD-PSNR", b, c, |r| r.psnr);
        let bd_vmaf = match (vmaf_baseline, vmaf_caps) {
            (Some(vb), Some(vc)) => {
                let bc = curve(b, |r| vmaf_of(Some(vb), r));
                let cc = curve(c, |r| vmaf_of(Some(vc), r));
                match bc.and_then(|bc| cc.and_then(|cc| bd_quality(&bc, &cc))) {
                    Ok(d) => Some(d),
                    Err(e) => {
                        warn!("{id}: no BD-VMAF: {e}");
                        None
                    }
                }
            }
            _ => None,
        };
        segments.push(SegmentDelta {
            segment_id: (*id).clone(),
            bd_psnr,
            bd_vmaf,
        });
    }

    let n_rungs = common
        .iter()
        .map(|id| base[*id].len().min(caps[*id].len()))
        .min()
        .unwrap_or(0);
    let (base, caps, common) = (&base, &caps, &common);
    let rungs = (0..n_rungs)
        .map(|i| {
            let b = || common.iter().map(move |id| &base[*id][i]);
            let c = || common.iter().map(move |id| &caps[*id][i]);
            let first = &base[common[0]][i];
            RungComparison {
                rung: first.rung,
                width: first.width,
                bitrate_kbps: first.bitrate_kbps,
                baseline_time: mean(b().map(|r| r.wall_time)).unwrap_or(0.0),
                caps_time: mean(c().map(|r| r.wall_time)).unwrap_or(0.0),
                baseline_idle: mean(b().map(|r| r.idle_time)).unwrap_or(0.0),
                caps_idle: mean(c().map(|r| r.idle_time)).unwrap_or(0.0),
                caps_mean_preset: mean(c().map(|r| f64::from(r.preset))).unwrap_or(0.0),
                baseline_psnr: mean(b().filter_map(|r| r.psnr)),
                caps_psnr: mean(c().filter_map(|r| r.psnr)),
                baseline_vmaf: mean(b().filter_map(|r| vmaf_of(vmaf_baseline, r))),
                caps_vmaf: mean(c().filter_map(|r| vmaf_of(vmaf_caps, r))),
            }
        })
        .collect();

    let report = EvaluationReport {
        mean_bd_psnr: mean(segments.iter().filter_map(|s| s.bd_psnr)),
        mean_bd_vmaf: mean(segments.iter().filter_map(|s| s.bd_vmaf)),
        segments,
        rungs,
    };
    write_outputs(out, &report)?;
    Ok(report)
}

fn write_outputs(out: &Path, report: &EvaluationReport) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::file(out, e))?;
    let mut w = csv::Writer::from_path(out.join(BD_REPORT_CSV))?;
    for s in &report.segments {
        w.serialize(s)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out.join(PER_RUNG_CSV))?;
    for r in &report.rungs {
        w.serialize(r)?;
    }
    w.flush()?;

    let path = out.join(BD_SUMMARY_TXT);
    fs::write(&path, report.to_string()).map_err(|e| Error::file(&path, e))?;

    let labels: Vec<String> = report.rungs.iter().map(|r| format!("{:02}", r.rung)).collect();
    let column = |f: &dyn Fn(&RungComparison) -> Option<f64>| report.rungs.iter().map(f).collect::<Vec<_>>();
    let charts = [
        (
            "time_per_rung.svg",
            "Encoding time per representation",
            "seconds",
            column(&|r| Some(r.baseline_time)),
            column(&|r| Some(r.caps_time)),
        ),
        (
            "psnr_per_rung.svg",
            "PSNR per representation",
            "dB",
            column(&|r| r.baseline_psnr),
            column(&|r| r.caps_psnr),
        ),
        (
            "vmaf_per_rung.svg",
            "VMAF per representation",
            "VMAF",
            column(&|r| r.baseline_vmaf),
            column(&|r| r.caps_vmaf),
        ),
    ];
    for (file, title, unit, base, caps) in charts {
        if base.iter().chain(&caps).all(Option::is_none) {
            continue;
        }
        let svg = line_chart_svg(title, unit, &labels, &[("ultrafast", base), ("CAPS", caps)]);
        let path = out.join(file);
        fs::write(&path, svg).map_err(|e| Error::file(&path, e))?;
    }
    Ok(())
}

/// Minimal multi-series line chart; missing values break the line.
pub fn line_chart_svg(title: &str, y_label: &str, x_labels: &[String], series: &[(&str, Vec<Option<f64>>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const L: f64 = 60.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 40.0;
    const COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

    let values = series.iter().flat_map(|(_, v)| v.iter().flatten().copied());
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        hi = lo + 1.0;
    }
    let n = x_labels.len().max(2);
    let x = |i: usize| L + (W - L - R) * i as f64 / (n - 1) as f64;
    let y = |v: f64| T + (H - T - B) * (1.0 - (v - lo) / (hi - lo));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{L}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - B,
        W - R,
        H - B
    );
    let _ = writeln!(s, r#"<line x1="{L}" y1="{T}" x2="{L}" y2="{}" stroke="black"/>"#, H - B);
    for k in 0..=4 {
        let v = lo + (hi - lo) * f64::from(k) / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
            L - 5.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{y_label}</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (i, label) in x_labels.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{label}</text>"#,
            x(i),
            H - B + 16.0
        );
    }
    for (si, (name, vals)) in series.iter().enumerate() {
        let color = COLORS[si % COLORS.len()];
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, s: &mut String| {
            if run.len() > 1 {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                    run.join(" ")
                );
            }
            run.clear();
        };
        for (i, v) in vals.iter().enumerate() {
            match v {
                Some(v) => {
                    run.push(format!("{:.1},{:.1}", x(i), y(*v)));
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                        x(i),
                        y(*v)
                    );
                }
                None => flush(&mut run, &mut s),
            }
        }
        flush(&mut run, &mut s);
        let ly = T + 14.0 * si as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#,
            W - R - 90.0,
            ly
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{name}</text>"#, W - R - 75.0, ly + 9.0);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_has_one_polyline_per_series() {
        let labels: Vec<String> = (1..=4).map(|i| i.to_string()).collect();
        let svg = line_chart_svg(
            "t",
            "s",
            &labels,
            &[
                ("a", vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)]),
                ("b", vec![Some(2.0), None, Some(1.0), Some(0.5)]),
            ],
        );
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
