//! Bjøntegaard-delta quality between two rate–quality curves.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    /// Achieved bitrate.
    pub bitrate_kbps: f64,
    /// PSNR in dB or VMAF score.
    pub quality: f64,
}

/// At least four points with strictly increasing bitrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdCurve {
    points: Vec<RdPoint>,
}

impl RdCurve {
    pub const MIN_POINTS: usize = 4;

    pub fn new(points: Vec<RdPoint>) -> Result<Self> {
        if points.len() < Self::MIN_POINTS {
            return Err(Error::Input(format!(
                "rate-quality curve needs {} points, got {}",
                Self::MIN_POINTS,
                points.len()
            )));
        }
        for p in &points {
            if !(p.bitrate_kbps.is_finite() && p.bitrate_kbps > 0.0) || !p.quality.is_finite() {
                return Err(Error::Input(format!("invalid rate-quality point {p:?}")));
            }
        }
        if !points.windows(2).all(|w| w[0].bitrate_kbps < w[1].bitrate_kbps) {
            return Err(Error::Input("curve bitrates must be strictly increasing".into()));
        }
        Ok(RdCurve { points })
    }

    /// Sorts by bitrate first; duplicate bitrates are still rejected.
    pub fn from_unsorted(mut points: Vec<RdPoint>) -> Result<Self> {
        points.sort_by(|a, b| a.bitrate_kbps.total_cmp(&b.bitrate_kbps));
        Self::new(points)
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    fn log_range(&self) -> (f64, f64) {
        let first = self.points[0].bitrate_kbps.log10();
        let last = self.points[self.points.len() - 1].bitrate_kbps.log10();
        (first, last)
    }

    /// Least-squares cubic `quality ≈ Σ c_k (log10(b) − center)^k`.
    fn fit_cubic(&self, center: f64) -> Result<[f64; 4]> {
        let n = self.points.len();
        let a = DMatrix::from_fn(n, 4, |i, k| {
            (self.points[i].bitrate_kbps.log10() - center).powi(k as i32)
        });
        let y = DVector::from_iterator(n, self.points.iter().map(|p| p.quality));
        let c = a
            .svd(true, true)
            .solve(&y, 1e-13)
            .map_err(|e| Error::Evaluation(format!("cubic fit failed: {e}")))?;
        Ok([c[0], c[1], c[2], c[3]])
    }
}

fn integral(c: &[f64; 4], lo: f64, hi: f64) -> f64 {
    let anti = |x: f64| x * (c[0] + x * (c[1] / 2.0 + x * (c[2] / 3.0 + x * c[3] / 4.0)));
    anti(hi) - anti(lo)
}

/// Mean quality difference `test − reference` over the shared log-bitrate
/// interval. Positive means `test` is better at equal bitrate.
pub fn bd_quality(reference: &RdCurve, test: &RdCurve) -> Result<f64> {
    let (r_lo, r_hi) = reference.log_range();
    let (t_lo, t_hi) = test.log_range();
    let lo = r_lo.max(t_lo);
    let hi = r_hi.min(t_hi);
    if hi <= lo {
        return Err(Error::Evaluation("curves share no bitrate range".into()));
    }
    let center = 0.5 * (lo + hi);
    let cr = reference.fit_cubic(center)?;
    let ct = test.fit_cubic(center)?;
    let (a, b) = (lo - center, hi - center);
    Ok((integral(&ct, a, b) - integral(&cr, a, b)) / (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(pts: &[(f64, f64)]) -> RdCurve {
        RdCurve::new(
            pts.iter()
                .map(|&(b, q)| RdPoint {
                    bitrate_kbps: b,
                    quality: q,
                })
                .collect(),
        )
        .unwrap()
    }

    const BASE: [(f64, f64); 5] = [
        (145.0, 30.1),
        (600.0, 34.0),
        (1600.0, 37.2),
        (4500.0, 40.3),
        (16800.0, 43.0),
    ];

    #[test]
    fn identical_curves_give_zero() {
        let c = curve(&BASE);
        assert!(bd_quality(&c, &c).unwrap().abs() < 1e-9);
    }

    #[test]
    fn constant_offset() {
        let shifted: Vec<_> = BASE.iter().map(|&(b, q)| (b, q + 1.0)).collect();
        let d = bd_quality(&curve(&BASE), &curve(&shifted)).unwrap();
        assert!((d - 1.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn known_cubics_match_closed_form() {
        // q_ref(x) = 30 + 5x, q_test(x) = 28 + 6x + 0.5x^2 - 0.1x^3, x = log10(kbps)
        let xs_ref = [2.0, 2.5, 3.0, 4.0];
        let xs_test = [2.2, 2.8, 3.5, 4.2];
        let qr = |x: f64| 30.0 + 5.0 * x;
        let qt = |x: f64| 28.0 + 6.0 * x + 0.5 * x * x - 0.1 * x * x * x;
        let r: Vec<_> = xs_ref.iter().map(|&x| (10f64.powf(x), qr(x))).collect();
        let t: Vec<_> = xs_test.iter().map(|&x| (10f64.powf(x), qt(x))).collect();
        let d = bd_quality(&curve(&r), &curve(&t)).unwrap();
        // difference -2 + x + 0.5x^2 - 0.1x^3 integrated over [2.2, 4.0]
        let anti = |x: f64| -2.0 * x + x * x / 2.0 + 0.5 * x.powi(3) / 3.0 - 0.1 * x.powi(4) / 4.0;
        let expected = (anti(4.0) - anti(2.2)) / (4.0 - 2.2);
        assert!((d - expected).abs() < 1e-6, "{d} vs {expected}");
    }

    #[test]
    fn curve_validation() {
        assert!(RdCurve::new(vec![
            RdPoint {
                bitrate_kbps: 1.0,
                quality: 1.0
            };
            3
        ])
        .is_err());
        let dup: Vec<_> = [(100.0, 1.0), (100.0, 2.0), (200.0, 3.0), (300.0, 4.0)]
            .iter()
            .map(|&(b, q)| RdPoint {
                bitrate_kbps: b,
                quality: q,
            })
            .collect();
        assert!(RdCurve::from_unsorted(dup).is_err());
        let neg: Vec<_> = [(-1.0, 1.0), (100.0, 2.0), (200.0, 3.0), (300.0, 4.0)]
            .iter()
            .map(|&(b, q)| RdPoint {
                bitrate_kbps: b,
                quality: q,
            })
            .collect();
        assert!(RdCurve::new(neg).is_err());
    }

    #[test]
    fn disjoint_ranges() {
        let a = curve(&[(100.0, 1.0), (200.0, 2.0), (300.0, 3.0), (400.0, 4.0)]);
        let b = curve(&[(500.0, 1.0), (600.0, 2.0), (700.0, 3.0), (800.0, 4.0)]);
        assert!(matches!(bd_quality(&a, &b), Err(Error::Evaluation(_))));
    }
}
