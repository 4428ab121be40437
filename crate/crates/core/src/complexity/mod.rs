//! DCT-energy complexity features of a segment of luma frames.
//!
//! Every frame is split into non-overlapping `w × w` blocks (the right and
//! bottom remainders are cropped). For each block the texture energy `H` is the
//! exponentially weighted sum of AC coefficient magnitudes and the block
//! luminescence is the square root of the DC coefficient. Per segment:
//!
//! * `E` averages `H / w²` over all blocks of all frames,
//! * `h` averages `|H(s, k) − H(s−1, k)| / w²` over consecutive frame pairs,
//! * `L` averages `sqrt(DC) / w²` over all blocks of all frames.

mod dct;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dct::{block_luminescence, block_texture, dct2d, Block, BlockTexture, DctPlan, Luminescence};

use crate::error::{Error, Result};

pub const DEFAULT_BLOCK_SIZE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub block_size: usize,
    pub bit_depth: u8,
}

impl AnalyzerConfig {
    pub fn new(block_size: usize, bit_depth: u8) -> Result<Self> {
        let cfg = AnalyzerConfig { block_size, bit_depth };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_size < 4 || !self.block_size.is_power_of_two() {
            return Err(Error::Config(format!(
                "block size {} must be a power of two >= 4",
                self.block_size
            )));
        }
        if self.bit_depth != 8 && self.bit_depth != 10 {
            return Err(Error::Config(format!("bit depth {} must be 8 or 10", self.bit_depth)));
        }
        Ok(())
    }
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig {
            block_size: DEFAULT_BLOCK_SIZE,
            bit_depth: 8,
        }
    }
}

/// One luma plane, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LumaFrame {
    width: usize,
    height: usize,
    samples: Vec<u16>,
}

impl LumaFrame {
    pub fn new(width: usize, height: usize, samples: Vec<u16>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(Error::Input(format!(
                "{} samples for a {width}x{height} frame",
                samples.len()
            )));
        }
        Ok(LumaFrame { width, height, samples })
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Self {
        LumaFrame {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [u16] {
        &mut self.samples
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u16 {
        self.samples[y * self.width + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentFeatures {
    /// Average texture energy `E`.
    pub texture_energy: f64,
    /// Average temporal energy `h`.
    pub temporal_energy: f64,
    /// Average luminescence `L`.
    pub luminescence: f64,
    pub frame_count: usize,
    pub blocks_per_frame: usize,
    /// Blocks whose DC coefficient came out negative and was clamped.
    #[serde(default)]
    pub clamped_dc_blocks: u64,
}

impl SegmentFeatures {
    /// `segment_id,E,h,L,frames,width,height`
    pub fn csv_line(&self, segment_id: &str, width: usize, height: usize) -> String {
        format!(
            "{segment_id},{},{},{},{},{width},{height}",
            self.texture_energy, self.temporal_energy, self.luminescence, self.frame_count
        )
    }
}

pub const FEATURE_CSV_HEADER: &str = "segment_id,E,h,L,frames,width,height";

/// Reusable analyzer for one configuration.
#[derive(Debug, Clone)]
pub struct Analyzer {
    cfg: AnalyzerConfig,
    plan: DctPlan,
}

struct FrameBlocks {
    texture: Vec<f64>,
    luma: Vec<f64>,
    clamped: u64,
}

impl Analyzer {
    pub fn new(cfg: AnalyzerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Analyzer {
            cfg,
            plan: DctPlan::new(cfg.block_size)?,
        })
    }

    pub fn config(&self) -> &AnalyzerConfig {
        &self.cfg
    }

    pub fn analyze(&self, frames: &[LumaFrame]) -> Result<SegmentFeatures> {
        let w = self.cfg.block_size;
        let first = frames
            .first()
            .ok_or_else(|| Error::Input("empty frame sequence".into()))?;
        let (width, height) = (first.width, first.height);
        if width < w || height < w {
            return Err(Error::Input(format!(
                "{width}x{height} frame is smaller than one {w}x{w} block"
            )));
        }
        let max_sample = (1u32 << self.cfg.bit_depth) - 1;
        for (s, f) in frames.iter().enumerate() {
            if f.width != width || f.height != height {
                return Err(Error::Input(format!(
                    "frame {s} is {}x{}, expected {width}x{height}",
                    f.width, f.height
                )));
            }
            if let Some(v) = f.samples.iter().find(|&&v| u32::from(v) > max_sample) {
                return Err(Error::Input(format!(
                    "frame {s} holds sample {v} above {}-bit range",
                    self.cfg.bit_depth
                )));
            }
        }

        // Frames are analysed independently; the reduction below runs in a
        // fixed order so the result does not depend on the worker count.
        let per_frame: Vec<FrameBlocks> = frames.par_iter().map(|f| self.frame_blocks(f)).collect();

        let s_count = frames.len();
        let k_count = per_frame[0].texture.len();
        let w2 = (w * w) as f64;

        let mut texture_sum = 0.0;
        let mut luma_sum = 0.0;
        let mut clamped = 0;
        for fb in &per_frame {
            for (&t, &l) in fb.texture.iter().zip(&fb.luma) {
                texture_sum += t;
                luma_sum += l;
            }
            clamped += fb.clamped;
        }
        let mut temporal_sum = 0.0;
        for pair in per_frame.windows(2) {
            for (cur, prev) in pair[1].texture.iter().zip(&pair[0].texture) {
                temporal_sum += (cur - prev).abs();
            }
        }

        let blocks = (s_count * k_count) as f64;
        let temporal = if s_count > 1 {
            temporal_sum / (((s_count - 1) * k_count) as f64 * w2)
        } else {
            0.0
        };
        Ok(SegmentFeatures {
            texture_energy: texture_sum / (blocks * w2),
            temporal_energy: temporal,
            luminescence: luma_sum / (blocks * w2),
            frame_count: s_count,
            blocks_per_frame: k_count,
            clamped_dc_blocks: clamped,
        })
    }

    fn frame_blocks(&self, frame: &LumaFrame) -> FrameBlocks {
        let w = self.cfg.block_size;
        let (bx, by) = (frame.width / w, frame.height / w);
        let mut out = FrameBlocks {
            texture: Vec::with_capacity(bx * by),
            luma: Vec::with_capacity(bx * by),
            clamped: 0,
        };
        let mut centered = vec![0.0; w * w];
        let mut scratch = vec![0.0; w * w];
        let mut coeffs = vec![0.0; w * w];
        let n = (w * w) as f64;
        for row in 0..by {
            for col in 0..bx {
                let mut sum: u64 = 0;
                for y in 0..w {
                    let start = (row * w + y) * frame.width + col * w;
                    for &v in &frame.samples[start..start + w] {
                        sum += u64::from(v);
                    }
                }
                // w² is a power of two, so the mean and the centred samples
                // are exact; the AC coefficients of the centred block equal
                // those of the original block.
                let mean = sum as f64 / n;
                for y in 0..w {
                    let start = (row * w + y) * frame.width + col * w;
                    for (x, &v) in frame.samples[start..start + w].iter().enumerate() {
                        centered[y * w + x] = f64::from(v) - mean;
                    }
                }
                self.plan.forward_into(&centered, &mut scratch, &mut coeffs);
                coeffs[0] = 0.0;
                out.texture.push(self.plan.texture_of(&coeffs));

                // orthonormal DC = sum / w
                let dc = sum as f64 / w as f64;
                out.luma.push(dc.sqrt());
            }
        }
        out
    }
}

/// Compute `(E, h, L)` for a segment.
pub fn segment_features(frames: &[LumaFrame], cfg: &AnalyzerConfig) -> Result<SegmentFeatures> {
    Analyzer::new(*cfg)?.analyze(frames)
}
