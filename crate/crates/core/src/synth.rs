//! Deterministic synthetic luma segments for tests, examples and mock runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complexity::LumaFrame;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSegment {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Mean sample value.
    pub brightness: f64,
    /// Amplitude of the sinusoidal texture.
    pub texture: f64,
    /// Horizontal texture drift in pixels per frame.
    pub motion: f64,
    /// Amplitude of per-frame uniform noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSegment {
    fn default() -> Self {
        SyntheticSegment {
            width: 128,
            height: 64,
            frames: 24,
            brightness: 110.0,
            texture: 30.0,
            motion: 1.0,
            noise: 4.0,
            seed: 0,
        }
    }
}

impl SyntheticSegment {
    /// A segment with content parameters drawn from `seed`.
    pub fn random(seed: u64, width: usize, height: usize, frames: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SyntheticSegment {
            width,
            height,
            frames,
            brightness: rng.gen_range(40.0..200.0),
            texture: rng.gen_range(2.0..50.0),
            motion: rng.gen_range(0.0..4.0),
            noise: rng.gen_range(0.0..12.0),
            seed,
        }
    }

    pub fn render(&self) -> Vec<LumaFrame> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_f00d);
        let fx = 2.0 * std::f64::consts::PI / 23.0;
        let fy = 2.0 * std::f64::consts::PI / 17.0;
        (0..self.frames)
            .map(|s| {
                let shift = self.motion * s as f64;
                let samples = (0..self.width * self.height)
                    .map(|i| {
                        let (x, y) = ((i % self.width) as f64, (i / self.width) as f64);
                        let pattern = ((x + shift) * fx).sin() * (y * fy).cos()
                            + 0.5 * ((x + shift) * fx * 3.1 + y * fy * 2.3).sin();
                        let n = if self.noise > 0.0 {
                            rng.gen_range(-self.noise..self.noise)
                        } else {
                            0.0
                        };
                        (self.brightness + self.texture * pattern + n).round().clamp(0.0, 255.0) as u16
                    })
                    .collect();
                LumaFrame::new(self.width, self.height, samples).expect("sized by construction")
            })
            .collect()
    }
}

/// Uniform random frames, each sample independent.
pub fn noise_frames(rng: &mut impl Rng, width: usize, height: usize, count: usize, bit_depth: u8) -> Vec<LumaFrame> {
    let max = (1u16 << bit_depth) - 1;
    (0..count)
        .map(|_| {
            let samples = (0..width * height).map(|_| rng.gen_range(0..=max)).collect();
            LumaFrame::new(width, height, samples).expect("sized by construction")
        })
        .collect()
}
