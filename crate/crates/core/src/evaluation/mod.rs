//! Quality evaluation: PSNR, VMAF ingestion and Bjøntegaard deltas between a
//! CAPS run and a fixed-preset baseline run.

mod bd;
mod compare;
mod psnr;
mod vmaf;

pub use bd::{bd_quality, RdCurve, RdPoint};
pub use compare::{evaluate_runs, line_chart_svg, EvaluationReport, RungComparison, SegmentDelta, BD_REPORT_CSV};
pub use psnr::{psnr, PsnrReport, DEFAULT_PSNR_CEILING};
pub use vmaf::{ingest_vmaf, libvmaf_mean, VmafScores};
