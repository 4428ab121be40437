use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EncodeJob, EncodeResult, JobStatus};
use crate::complexity::SegmentFeatures;
use crate::error::Result;
use crate::ladder::Representation;
use crate::timing::{FeatureVector, PresetTimes, TimePredictor};

/// Deterministic encoder stand-in. Encoding time is
///
/// ```text
/// t = scale · (wE·E + wh·h + base) · (r / r_ref)^ρ · (b / b_ref)^β
///           · (1 + lin·p) · growth^p · (c_ref / c)^θ
/// ```
///
/// which grows with content complexity, resolution, bitrate and preset index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockEncoder {
    pub time_scale: f64,
    pub texture_weight: f64,
    pub temporal_weight: f64,
    pub base_complexity: f64,
    pub reference_width: f64,
    pub width_exponent: f64,
    pub reference_kbps: f64,
    pub bitrate_exponent: f64,
    pub preset_linear: f64,
    pub preset_growth: f64,
    pub reference_threads: f64,
    pub thread_exponent: f64,
    pub quality: MockQuality,
    /// Sleep for the simulated time instead of returning immediately.
    pub realtime: bool,
    pub preset_range: (u8, u8),
    pub threads: u32,
}

/// Synthetic luma PSNR:
/// `base + per_decade·log10(b/b_ref) − width_penalty·log10(r/r_ref)
///  − complexity_penalty·ln(k) + preset_gain·ln(1 + p)`, clamped to [20, 60].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockQuality {
    pub base_psnr: f64,
    pub per_decade: f64,
    pub width_penalty: f64,
    pub complexity_penalty: f64,
    pub preset_gain: f64,
    /// Fractional bitrate undershoot per preset step.
    pub bitrate_saving_per_preset: f64,
}

impl Default for MockQuality {
    fn default() -> Self {
        MockQuality {
            base_psnr: 38.0,
            per_decade: 9.0,
            width_penalty: 6.0,
            complexity_penalty: 2.0,
            preset_gain: 0.9,
            bitrate_saving_per_preset: 0.004,
        }
    }
}

impl Default for MockEncoder {
    fn default() -> Self {
        MockEncoder {
            time_scale: 4.0,
            texture_weight: 0.02,
            temporal_weight: 0.05,
            base_complexity: 0.5,
            reference_width: 1920.0,
            width_exponent: 1.6,
            reference_kbps: 1000.0,
            bitrate_exponent: 0.3,
            preset_linear: 0.0,
            preset_growth: 1.7,
            reference_threads: 8.0,
            thread_exponent: 0.8,
            quality: MockQuality::default(),
            realtime: false,
            preset_range: (0, 8),
            threads: 8,
        }
    }
}

impl MockEncoder {
    pub fn complexity(&self, e: f64, h: f64) -> f64 {
        self.texture_weight * e + self.temporal_weight * h + self.base_complexity
    }

    pub fn encode_time(&self, e: f64, h: f64, width: f64, bitrate_kbps: f64, preset: u8, threads: u32) -> f64 {
        let p = f64::from(preset);
        self.time_scale
            * self.complexity(e, h)
            * (width / self.reference_width).powf(self.width_exponent)
            * (bitrate_kbps / self.reference_kbps).powf(self.bitrate_exponent)
            * (1.0 + self.preset_linear * p)
            * self.preset_growth.powf(p)
            * (self.reference_threads / f64::from(threads.max(1))).powf(self.thread_exponent)
    }

    pub fn job_time(&self, features: &SegmentFeatures, rung: &Representation, preset: u8, threads: u32) -> f64 {
        self.encode_time(
            features.texture_energy,
            features.temporal_energy,
            f64::from(rung.width),
            rung.bitrate_kbps,
            preset,
            threads,
        )
    }

    pub fn psnr(&self, e: f64, h: f64, rung: &Representation, preset: u8) -> f64 {
        let q = &self.quality;
        let v = q.base_psnr + q.per_decade * (rung.bitrate_kbps / self.reference_kbps).log10()
            - q.width_penalty * (f64::from(rung.width) / self.reference_width).log10()
            - q.complexity_penalty * self.complexity(e, h).max(1e-6).ln()
            + q.preset_gain * (1.0 + f64::from(preset)).ln();
        v.clamp(20.0, 60.0)
    }

    pub fn achieved_kbps(&self, rung: &Representation, preset: u8) -> f64 {
        rung.bitrate_kbps * (1.0 - self.quality.bitrate_saving_per_preset * f64::from(preset)).max(0.5)
    }

    pub(super) fn run(&self, job: &EncodeJob) -> EncodeResult {
        let t = self.job_time(&job.features, &job.representation, job.preset, job.threads);
        if !(t.is_finite() && t > 0.0) {
            return EncodeResult::failed(
                0.0,
                JobStatus::Failed(format!("mock time {t} is not positive")),
                String::new(),
            );
        }
        if self.realtime {
            std::thread::sleep(Duration::from_secs_f64(t));
        }
        let kbps = self.achieved_kbps(&job.representation, job.preset);
        let bytes = (kbps * 1000.0 / 8.0 * job.source.duration_seconds()).round() as u64;
        EncodeResult {
            wall_time: t,
            cpu_time: Some(t * f64::from(job.threads)),
            status: JobStatus::Success,
            output_bytes: bytes.max(1),
            achieved_kbps: Some(kbps),
            psnr: Some(self.psnr(
                job.features.texture_energy,
                job.features.temporal_energy,
                &job.representation,
                job.preset,
            )),
            diagnostics: String::new(),
        }
    }
}

/// The mock doubles as a perfect predictor: predicted time equals the time
/// the mock will report for the same job.
impl TimePredictor for MockEncoder {
    fn preset_range(&self) -> (u8, u8) {
        self.preset_range
    }

    fn predict_times(&self, fv: &FeatureVector, rung: &Representation) -> Result<PresetTimes> {
        let (lo, hi) = self.preset_range;
        Ok((lo..=hi)
            .map(|p| {
                let t = self.encode_time(
                    fv.texture_energy,
                    fv.temporal_energy,
                    f64::from(rung.width),
                    rung.bitrate_kbps,
                    p,
                    self.threads,
                );
                (p, t)
            })
            .collect())
    }

    fn check_rungs(&self, rungs: &[Representation]) -> Result<()> {
        rungs.iter().try_for_each(Representation::validate)
    }
}
