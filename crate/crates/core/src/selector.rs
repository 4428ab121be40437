//! Deadline-constrained preset selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timing::PresetTimes;

/// Segment length and target encoding speed, with the derived deadline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeadlineSpec {
    pub frames: u32,
    pub fps: f64,
    pub target_seconds: f64,
}

impl DeadlineSpec {
    pub fn new(frames: u32, fps: f64) -> Result<Self> {
        Ok(DeadlineSpec {
            frames,
            fps,
            target_seconds: target_time(frames, fps)?,
        })
    }
}

/// `T = n / f`.
pub fn target_time(frames: u32, fps: f64) -> Result<f64> {
    if frames == 0 {
        return Err(Error::Input("segment must have at least one frame".into()));
    }
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::Input(format!("target speed {fps} fps must be positive")));
    }
    Ok(f64::from(frames) / fps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetDecision {
    pub preset: u8,
    pub predicted_time: f64,
    pub deadline_met: bool,
    /// `T − predicted_time`; negative when the deadline cannot be met.
    pub margin: f64,
}

/// Picks the preset whose predicted time is closest to `target` without
/// exceeding it; equal times go to the higher (slower) preset. When no preset
/// fits, falls back to the fastest one with `deadline_met = false`.
pub fn select_preset(times: &PresetTimes, target: f64) -> Result<PresetDecision> {
    let (&p_min, &t_min) = times
        .iter()
        .next()
        .ok_or_else(|| Error::Input("no preset times".into()))?;
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::Input(format!("deadline {target} must be positive")));
    }
    let p_max = *times.keys().next_back().expect("non-empty");
    if usize::from(p_max - p_min) + 1 != times.len() {
        return Err(Error::Input(format!("presets {p_min}..={p_max} are not contiguous")));
    }
    if let Some((p, t)) = times.iter().find(|(_, t)| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::Input(format!("preset {p} has nonpositive time {t}")));
    }

    let mut best: Option<(u8, f64)> = None;
    for (&p, &t) in times {
        if t > target {
            continue;
        }
        // iteration is ascending in p, so >= keeps the higher preset on ties
        if best.is_none_or(|(_, bt)| target - t <= target - bt) {
            best = Some((p, t));
        }
    }
    Ok(match best {
        Some((preset, t)) => PresetDecision {
            preset,
            predicted_time: t,
            deadline_met: true,
            margin: target - t,
        },
        None => PresetDecision {
            preset: p_min,
            predicted_time: t_min,
            deadline_met: false,
            margin: target - t_min,
        },
    })
}
