use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One rung of a bitrate ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    /// Encoding width in pixels.
    pub width: u32,
    pub bitrate_kbps: f64,
}

impl Representation {
    pub fn new(width: u32, bitrate_kbps: f64) -> Result<Self> {
        let rep = Representation { width, bitrate_kbps };
        rep.validate()?;
        Ok(rep)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || !(self.bitrate_kbps.is_finite() && self.bitrate_kbps > 0.0) {
            return Err(Error::Config(format!(
                "representation {}@{} kbps needs positive width and bitrate",
                self.width, self.bitrate_kbps
            )));
        }
        Ok(())
    }
}

/// The twelve-rung HLS authoring ladder.
pub fn hls_ladder() -> Vec<Representation> {
    const RUNGS: [(u32, f64); 12] = [
        (360, 145.0),
        (432, 300.0),
        (540, 600.0),
        (540, 900.0),
        (540, 1600.0),
        (720, 2400.0),
        (720, 3400.0),
        (1080, 4500.0),
        (1080, 5800.0),
        (1440, 8100.0),
        (2160, 11600.0),
        (2160, 16800.0),
    ];
    RUNGS
        .iter()
        .map(|&(width, bitrate_kbps)| Representation { width, bitrate_kbps })
        .collect()
}

/// Distinct widths in ascending order.
pub fn distinct_widths(rungs: &[Representation]) -> Vec<u32> {
    let mut widths: Vec<u32> = rungs.iter().map(|r| r.width).collect();
    widths.sort_unstable();
    widths.dedup();
    widths
}
