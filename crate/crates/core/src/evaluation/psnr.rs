use serde::{Deserialize, Serialize};

use crate::complexity::LumaFrame;
use crate::error::{Error, Result};

pub const DEFAULT_PSNR_CEILING: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsnrReport {
    /// Mean of per-frame PSNR.
    pub psnr: f64,
    pub frame_psnr: Vec<f64>,
    /// Frames with zero error, reported at the ceiling.
    pub lossless_frames: usize,
}

impl PsnrReport {
    pub fn is_lossless(&self) -> bool {
        self.lossless_frames == self.frame_psnr.len()
    }
}

/// Luma PSNR, `10·log10(peak² / MSE)` per frame, averaged over the segment.
pub fn psnr(reference: &[LumaFrame], distorted: &[LumaFrame], bit_depth: u8, ceiling: f64) -> Result<PsnrReport> {
    if reference.is_empty() || reference.len() != distorted.len() {
        return Err(Error::Input(format!(
            "frame counts differ or are zero: {} vs {}",
            reference.len(),
            distorted.len()
        )));
    }
    let peak = f64::from((1u32 << bit_depth) - 1);
    let mut frame_psnr = Vec::with_capacity(reference.len());
    let mut lossless_frames = 0;
    for (i, (a, b)) in reference.iter().zip(distorted).enumerate() {
        if a.width() != b.width() || a.height() != b.height() {
            return Err(Error::Input(format!(
                "frame {i}: {}x{} vs {}x{}",
                a.width(),
                a.height(),
                b.width(),
                b.height()
            )));
        }
        let sse: u64 = a
            .samples()
            .iter()
            .zip(b.samples())
            .map(|(&x, &y)| {
                let d = i64::from(x) - i64::from(y);
                (d * d) as u64
            })
            .sum();
        if sse == 0 {
            lossless_frames += 1;
            frame_psnr.push(ceiling);
            continue;
        }
        let mse = sse as f64 / a.samples().len() as f64;
        frame_psnr.push((10.0 * (peak * peak / mse).log10()).min(ceiling));
    }
    let mean = frame_psnr.iter().sum::<f64>() / frame_psnr.len() as f64;
    Ok(PsnrReport {
        psnr: mean,
        frame_psnr,
        lossless_frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_frames_hit_ceiling() {
        let f = vec![LumaFrame::filled(8, 8, 77); 3];
        let r = psnr(&f, &f, 8, DEFAULT_PSNR_CEILING).unwrap();
        assert_eq!(r.psnr, 100.0);
        assert!(r.is_lossless());
    }

    #[test]
    fn off_by_one_everywhere() {
        let a = vec![LumaFrame::filled(8, 8, 77)];
        let b = vec![LumaFrame::filled(8, 8, 78)];
        let r = psnr(&a, &b, 8, DEFAULT_PSNR_CEILING).unwrap();
        assert!((r.psnr - 10.0 * (255.0f64 * 255.0).log10()).abs() < 1e-12);
        assert!((r.psnr - 48.13).abs() < 0.01);
    }

    #[test]
    fn ten_bit_peak() {
        let a = vec![LumaFrame::filled(4, 4, 500)];
        let b = vec![LumaFrame::filled(4, 4, 501)];
        let r = psnr(&a, &b, 10, DEFAULT_PSNR_CEILING).unwrap();
        assert!((r.psnr - 20.0 * 1023f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn mismatches_rejected() {
        let a = vec![LumaFrame::filled(8, 8, 0)];
        assert!(psnr(&a, &[LumaFrame::filled(8, 4, 0)], 8, 100.0).is_err());
        assert!(psnr(&a, &[], 8, 100.0).is_err());
    }
}
