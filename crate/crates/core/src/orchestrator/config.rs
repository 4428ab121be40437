use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::complexity::AnalyzerConfig;
use crate::error::{Error, Result};
use crate::harness::EncoderBackend;
use crate::ladder::{hls_ladder, Representation};
use crate::selector::target_time;
use crate::video::RawFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LadderConfig {
    pub rungs: Vec<Representation>,
    /// Target encoding speed `f` in frames per second.
    pub framerate: f64,
    /// Frames per segment `n`.
    pub segment_frames: u32,
    /// Encoder threads per instance `c`.
    pub threads: u32,
    pub preset_range: (u8, u8),
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            rungs: hls_ladder(),
            framerate: 24.0,
            segment_frames: 120,
            threads: 8,
            preset_range: (0, 8),
        }
    }
}

impl LadderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rungs.is_empty() {
            return Err(Error::Config("ladder has no rungs".into()));
        }
        self.rungs.iter().try_for_each(Representation::validate)?;
        if !self.rungs.windows(2).all(|w| w[0].bitrate_kbps < w[1].bitrate_kbps) {
            return Err(Error::Config("ladder bitrates must be strictly increasing".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads per instance must be at least 1".into()));
        }
        if self.preset_range.0 > self.preset_range.1 {
            return Err(Error::Config("empty preset range".into()));
        }
        self.deadline().map(|_| ()).map_err(|e| Error::Config(e.to_string()))
    }

    /// Target encoding time `T = n / f`.
    pub fn deadline(&self) -> Result<f64> {
        target_time(self.segment_frames, self.framerate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputConfig {
    pub path: PathBuf,
    /// Present for headerless 4:2:0 input.
    #[serde(default)]
    pub raw: Option<RawInput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawInput {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_bit_depth")]
    pub bit_depth: u8,
    #[serde(default = "default_fps")]
    pub fps: (u32, u32),
}

fn default_bit_depth() -> u8 {
    8
}

fn default_fps() -> (u32, u32) {
    (24, 1)
}

impl From<RawInput> for RawFormat {
    fn from(r: RawInput) -> Self {
        RawFormat {
            width: r.width,
            height: r.height,
            bit_depth: r.bit_depth,
            fps: r.fps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticInput {
    pub segments: usize,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Declarative run description, usually loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub ladder: LadderConfig,
    pub backend: EncoderBackend,
    pub analyzer: AnalyzerConfig,
    pub model: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub input: Option<InputConfig>,
    /// Generated segments, used when no input file is given (mock only).
    pub synthetic: Option<SyntheticInput>,
    /// Concurrent rung encodes; defaults to the number of rungs.
    pub slots: Option<usize>,
    /// One rung at a time, for timing-sensitive runs.
    pub serial: bool,
    /// Flag segments whose feature extraction and prediction exceed this
    /// many seconds; defaults to the segment deadline.
    pub latency_budget: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ladder: LadderConfig::default(),
            backend: EncoderBackend::default(),
            analyzer: AnalyzerConfig::default(),
            model: None,
            output_dir: PathBuf::from("caps-run"),
            input: None,
            synthetic: None,
            slots: None,
            serial: false,
            latency_budget: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Relative paths inside the file resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.output_dir);
        if let Some(m) = cfg.model.as_mut() {
            resolve(m);
        }
        if let Some(i) = cfg.input.as_mut() {
            resolve(&mut i.path);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.ladder.validate()?;
        self.analyzer.validate()?;
        if self.slots == Some(0) {
            return Err(Error::Config("slots must be at least 1".into()));
        }
        Ok(())
    }

    pub fn effective_slots(&self) -> usize {
        if self.serial {
            1
        } else {
            self.slots.unwrap_or(self.ladder.rungs.len()).max(1)
        }
    }
}
