//! Orthonormal type-II 2-D DCT and the per-block texture/luminescence measures.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

/// Square `size × size` matrix of reals stored row-major. Row index is the
/// vertical frequency `i`, column index the horizontal frequency `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    size: usize,
    data: Vec<f64>,
}

impl Block {
    pub fn zeros(size: usize) -> Self {
        Block {
            size,
            data: vec![0.0; size * size],
        }
    }

    pub fn from_vec(size: usize, data: Vec<f64>) -> Result<Self> {
        if size == 0 || data.len() != size * size {
            return Err(Error::Config(format!(
                "block of {} values is not {size}x{size}",
                data.len()
            )));
        }
        Ok(Block { size, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::Config("block rows are not square".into()));
        }
        Block::from_vec(size, rows.concat())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.size + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Texture energy of one block: the weighted sum of AC coefficient magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct BlockTexture(pub f64);

impl BlockTexture {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Square root of a block's DC coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Luminescence {
    pub value: f64,
    /// The DC coefficient was negative and the value was clamped to zero.
    pub clamped: bool,
}

/// Precomputed basis and texture weights for one block size.
#[derive(Debug, Clone)]
pub struct DctPlan {
    size: usize,
    // basis[k * size + n] = alpha(k) * cos(pi * (2n + 1) * k / (2 * size))
    basis: Vec<f64>,
    weights: Vec<f64>,
}

impl DctPlan {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Config("DCT size must be positive".into()));
        }
        let n_f = size as f64;
        let mut basis = vec![0.0; size * size];
        for k in 0..size {
            let alpha = if k == 0 { (1.0 / n_f).sqrt() } else { (2.0 / n_f).sqrt() };
            for n in 0..size {
                basis[k * size + n] = alpha * (PI * (2 * n + 1) as f64 * k as f64 / (2.0 * n_f)).cos();
            }
        }
        Ok(DctPlan {
            size,
            basis,
            weights: texture_weights(size),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn forward(&self, block: &Block) -> Result<Block> {
        if block.size != self.size {
            return Err(Error::Config(format!(
                "block is {0}x{0} but the plan is {1}x{1}",
                block.size, self.size
            )));
        }
        let mut out = Block::zeros(self.size);
        let mut scratch = vec![0.0; self.size * self.size];
        self.forward_into(&block.data, &mut scratch, &mut out.data);
        Ok(out)
    }

    /// Separable transform: rows first, then columns.
    pub(crate) fn forward_into(&self, input: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        let w = self.size;
        for r in 0..w {
            let row = &input[r * w..(r + 1) * w];
            for k in 0..w {
                let b = &self.basis[k * w..(k + 1) * w];
                scratch[r * w + k] = row.iter().zip(b).map(|(x, c)| x * c).sum();
            }
        }
        for i in 0..w {
            let b = &self.basis[i * w..(i + 1) * w];
            for j in 0..w {
                let mut acc = 0.0;
                for (r, c) in b.iter().enumerate() {
                    acc += c * scratch[r * w + j];
                }
                out[i * w + j] = acc;
            }
        }
    }

    pub(crate) fn texture_of(&self, coeffs: &[f64]) -> f64 {
        self.weights.iter().zip(coeffs).map(|(wt, c)| wt * c.abs()).sum()
    }
}

/// `exp(|(i·j / w²)² − 1|)` for every position, zero at DC.
fn texture_weights(size: usize) -> Vec<f64> {
    let w2 = (size * size) as f64;
    let mut weights = vec![0.0; size * size];
    for i in 0..size {
        for j in 0..size {
            if i + j == 0 {
                continue;
            }
            let ratio = (i * j) as f64 / w2;
            weights[i * size + j] = E.powf((ratio * ratio - 1.0).abs());
        }
    }
    weights
}

/// Orthonormal type-II 2-D DCT of a square block.
pub fn dct2d(block: &Block) -> Result<Block> {
    DctPlan::new(block.size)?.forward(block)
}

pub fn block_texture(coeffs: &Block) -> BlockTexture {
    let weights = texture_weights(coeffs.size);
    BlockTexture(weights.iter().zip(&coeffs.data).map(|(wt, c)| wt * c.abs()).sum())
}

pub fn block_luminescence(coeffs: &Block) -> Luminescence {
    let dc = coeffs.get(0, 0);
    if dc < 0.0 {
        Luminescence {
            value: 0.0,
            clamped: true,
        }
    } else {
        Luminescence {
            value: dc.sqrt(),
            clamped: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Literal O(w^4) definition, independent of the separable path.
    fn naive_dct(block: &Block) -> Block {
        let w = block.size();
        let n = w as f64;
        let mut out = Block::zeros(w);
        for u in 0..w {
            for v in 0..w {
                let au = if u == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
                let av = if v == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
                let mut acc = 0.0;
                for x in 0..w {
                    for y in 0..w {
                        acc += block.get(x, y)
                            * (PI * (2 * x + 1) as f64 * u as f64 / (2.0 * n)).cos()
                            * (PI * (2 * y + 1) as f64 * v as f64 / (2.0 * n)).cos();
                    }
                }
                out.set(u, v, au * av * acc);
            }
        }
        out
    }

    fn literal_texture(c: &Block) -> f64 {
        let w = c.size();
        let mut h = 0.0;
        for i in 0..w {
            for j in 0..w {
                if i + j > 0 {
                    let x = ((i * j) as f64 / (w * w) as f64).powi(2) - 1.0;
                    h += x.abs().exp() * c.get(i, j).abs();
                }
            }
        }
        h
    }

    #[test]
    fn zero_block_transforms_to_zero() {
        let out = dct2d(&Block::zeros(8)).unwrap();
        assert!(out.as_slice().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn constant_block_has_only_dc() {
        let c = 37.0;
        let out = dct2d(&Block::from_vec(8, vec![c; 64]).unwrap()).unwrap();
        assert!((out.get(0, 0) - c * 8.0).abs() < 1e-12);
        for i in 0..8 {
            for j in 0..8 {
                if i + j > 0 {
                    assert!(out.get(i, j).abs() < 1e-12, "({i},{j}) = {}", out.get(i, j));
                }
            }
        }
    }

    #[test]
    fn unit_impulse_matches_double_sum() {
        let mut block = Block::zeros(4);
        block.set(0, 0, 1.0);
        let fast = dct2d(&block).unwrap();
        let slow = naive_dct(&block);
        for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
        // every basis function is 1/2 * 1/2-weighted at the origin for w = 4
        assert!((fast.get(0, 0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let plan = DctPlan::new(8).unwrap();
        assert!(matches!(plan.forward(&Block::zeros(4)), Err(Error::Config(_))));
        assert!(Block::from_vec(3, vec![0.0; 8]).is_err());
        assert!(Block::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn texture_ignores_dc() {
        let mut coeffs = Block::zeros(8);
        coeffs.set(0, 0, 800.0);
        assert_eq!(block_texture(&coeffs).value(), 0.0);
    }

    #[test]
    fn single_ac_coefficient_weighted_by_e() {
        let mut coeffs = Block::zeros(8);
        coeffs.set(1, 0, -3.5);
        assert!((block_texture(&coeffs).value() - E * 3.5).abs() < 1e-12);
    }

    #[test]
    fn luminescence_of_constant_block() {
        let out = dct2d(&Block::from_vec(8, vec![100.0; 64]).unwrap()).unwrap();
        let l = block_luminescence(&out);
        assert!((l.value - 800f64.sqrt()).abs() < 1e-9);
        assert!(!l.clamped);
        assert_eq!(block_luminescence(&Block::zeros(8)).value, 0.0);
    }

    #[test]
    fn negative_dc_is_clamped() {
        let mut coeffs = Block::zeros(4);
        coeffs.set(0, 0, -4.0);
        let l = block_luminescence(&coeffs);
        assert_eq!(l.value, 0.0);
        assert!(l.clamped);
    }

    #[test]
    fn random_blocks_match_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &w in &[4usize, 8, 16] {
            let data: Vec<f64> = (0..w * w).map(|_| rng.gen_range(0.0..1023.0)).collect();
            let block = Block::from_vec(w, data).unwrap();
            let fast = dct2d(&block).unwrap();
            let slow = naive_dct(&block);
            for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
            let ht = block_texture(&fast).value();
            let hs = literal_texture(&slow);
            assert!((ht - hs).abs() <= 1e-9 * hs);
            assert!((block_luminescence(&fast).value - slow.get(0, 0).sqrt()).abs() < 1e-9);
        }
    }
}
