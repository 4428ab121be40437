//! Brute-force references shared by the integration tests and the
//! acceptance suite. Everything here is written straight from the
//! definitions, with no shortcuts.

#![allow(dead_code)]

use std::f64::consts::PI;

use caps::complexity::LumaFrame;
use caps::timing::PresetTimes;

/// Orthonormal type-II 2-D DCT by direct summation, O(w⁴).
pub fn naive_dct(block: &[f64], w: usize) -> Vec<f64> {
    let alpha = |k: usize| {
        if k == 0 {
            (1.0 / w as f64).sqrt()
        } else {
            (2.0 / w as f64).sqrt()
        }
    };
    // cos[u][x] = cos((2x + 1)·u·π / 2w)
    let cos: Vec<Vec<f64>> = (0..w)
        .map(|u| {
            (0..w)
                .map(|x| ((2 * x + 1) as f64 * u as f64 * PI / (2 * w) as f64).cos())
                .collect()
        })
        .collect();
    let mut out = vec![0.0; w * w];
    for u in 0..w {
        for v in 0..w {
            let mut acc = 0.0;
            for x in 0..w {
                for y in 0..w {
                    acc += block[x * w + y] * cos[u][x] * cos[v][y];
                }
            }
            out[u * w + v] = alpha(u) * alpha(v) * acc;
        }
    }
    out
}

/// Block texture: Σ e^{|(ij/w²)² − 1|}·|DCT(i,j)| with the DC term zeroed.
pub fn texture(coeffs: &[f64], w: usize) -> f64 {
    let mut h = 0.0;
    for i in 0..w {
        for j in 0..w {
            if i + j == 0 {
                continue;
            }
            let r = (i * j) as f64 / (w * w) as f64;
            h += (r * r - 1.0).abs().exp() * coeffs[i * w + j].abs();
        }
    }
    h
}

/// `(E, h, L)` of a segment from the definitions, cropping to whole blocks.
pub fn literal_features(frames: &[LumaFrame], w: usize) -> (f64, f64, f64) {
    let s = frames.len();
    let (bx, by) = (frames[0].width() / w, frames[0].height() / w);
    let k = bx * by;
    let mut textures = vec![vec![0.0; k]; s];
    let mut lum = 0.0;
    for (fi, frame) in frames.iter().enumerate() {
        for row in 0..by {
            for col in 0..bx {
                let mut block = vec![0.0; w * w];
                for y in 0..w {
                    for x in 0..w {
                        block[y * w + x] = f64::from(frame.at(col * w + x, row * w + y));
                    }
                }
                let c = naive_dct(&block, w);
                textures[fi][row * bx + col] = texture(&c, w);
                lum += c[0].max(0.0).sqrt();
            }
        }
    }
    let norm = (k * w * w) as f64;
    let e = textures.iter().flatten().sum::<f64>() / (s as f64 * norm);
    let h = if s < 2 {
        0.0
    } else {
        let mut acc = 0.0;
        for fi in 1..s {
            for (now, before) in textures[fi].iter().zip(&textures[fi - 1]) {
                acc += (now - before).abs();
            }
        }
        acc / ((s - 1) as f64 * norm)
    };
    (e, h, lum / (s as f64 * norm))
}

/// Exhaustive constrained argmin of |T − t_p| over feasible presets, ties to
/// the higher preset; infeasible maps fall back to the lowest preset.
pub fn exhaustive_select(times: &PresetTimes, target: f64) -> (u8, bool) {
    let mut best: Option<(u8, f64)> = None;
    for (&p, &t) in times {
        if t <= target {
            let gap = (target - t).abs();
            match best {
                Some((_, g)) if gap > g => {}
                _ => best = Some((p, gap)),
            }
        }
    }
    match best {
        Some((p, _)) => (p, true),
        None => (*times.keys().next().unwrap(), false),
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}
