//! Encoding jobs against a real encoder subprocess or a deterministic mock.

mod command;
mod dataset;
mod mock;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use command::{CommandBackend, FFMPEG_X265_TEMPLATE, X265_TEMPLATE};
pub use dataset::{build_dataset, DatasetPlan, DatasetReport, DatasetSegment};
pub use mock::{MockEncoder, MockQuality};

use crate::complexity::{LumaFrame, SegmentFeatures};
use crate::error::Result;
use crate::ladder::Representation;

/// Where a segment's frames live in the source file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSource {
    /// `None` for purely synthetic segments (mock backend only).
    pub path: Option<PathBuf>,
    /// First frame of the segment within `path`.
    pub seek: usize,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub bit_depth: u8,
}

impl SegmentSource {
    pub fn synthetic(frames: usize, width: usize, height: usize, fps: f64) -> Self {
        SegmentSource {
            path: None,
            seek: 0,
            frames,
            width,
            height,
            fps,
            bit_depth: 8,
        }
    }

    pub fn duration_seconds(&self) -> f64 {
        self.frames as f64 / self.fps
    }
}

#[derive(Debug, Clone)]
pub struct EncodeJob {
    pub segment_id: String,
    pub source: SegmentSource,
    pub features: SegmentFeatures,
    pub representation: Representation,
    pub preset: u8,
    pub threads: u32,
    pub output: PathBuf,
    /// Live deadline `T` of the segment; timeouts are multiples of it.
    pub deadline_seconds: f64,
    /// Source luma, used to score reconstructed output when available.
    pub reference: Option<Arc<Vec<LumaFrame>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum JobStatus {
    Success,
    Failed(String),
    TimedOut,
}

impl JobStatus {
    pub fn label(&self) -> &'static str {
        match self {
            JobStatus::Success => "ok",
            JobStatus::Failed(_) => "failed",
            JobStatus::TimedOut => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeResult {
    pub wall_time: f64,
    pub cpu_time: Option<f64>,
    pub status: JobStatus,
    pub output_bytes: u64,
    pub achieved_kbps: Option<f64>,
    pub psnr: Option<f64>,
    pub diagnostics: String,
}

impl EncodeResult {
    pub fn is_success(&self) -> bool {
        self.status == JobStatus::Success
    }

    pub(crate) fn failed(wall_time: f64, status: JobStatus, diagnostics: String) -> Self {
        EncodeResult {
            wall_time,
            cpu_time: None,
            status,
            output_bytes: 0,
            achieved_kbps: None,
            psnr: None,
            diagnostics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EncoderBackend {
    Mock(MockEncoder),
    Command(CommandBackend),
}

impl Default for EncoderBackend {
    fn default() -> Self {
        EncoderBackend::Mock(MockEncoder::default())
    }
}

impl EncoderBackend {
    pub fn is_mock(&self) -> bool {
        matches!(self, EncoderBackend::Mock(_))
    }
}

/// Runs one encode. Failures are reported in the result, not as `Err`; `Err`
/// is reserved for jobs that could not be attempted at all.
pub fn run_job(job: &EncodeJob, backend: &EncoderBackend) -> Result<EncodeResult> {
    match backend {
        EncoderBackend::Mock(m) => Ok(m.run(job)),
        EncoderBackend::Command(c) => c.run(job),
    }
}
