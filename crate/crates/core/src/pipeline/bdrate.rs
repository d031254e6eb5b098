use nalgebra::{DMatrix, DVector};

use super::eval::RDCurve;
use crate::{Error, Result};

const MIN_POINTS: usize = 4;
const MIN_OVERLAP_DB: f64 = 0.5;

/// `log₁₀(rate)` as a cubic in `psnr - center`.
struct Cubic {
    center: f64,
    coeffs: [f64; 4],
}

impl Cubic {
    fn fit(psnr: &[f64], log_rate: &[f64]) -> Result<Self> {
        let center = psnr.iter().sum::<f64>() / psnr.len() as f64;
        let a = DMatrix::from_fn(psnr.len(), 4, |i, k| (psnr[i] - center).powi(k as i32));
        let b = DVector::from_column_slice(log_rate);
        let c = a
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|e| Error::BadSpec(format!("cubic fit failed: {e}")))?;
        Ok(Self {
            center,
            coeffs: [c[0], c[1], c[2], c[3]],
        })
    }

    fn antiderivative(&self, x: f64) -> f64 {
        let u = x - self.center;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * u.powi(k as i32 + 1) / (k + 1) as f64)
            .sum()
    }

    fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.antiderivative(hi) - self.antiderivative(lo)
    }
}

fn prepare(curve: &RDCurve) -> Result<(Vec<f64>, Vec<f64>)> {
    if curve.len() < MIN_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_POINTS,
            got: curve.len(),
        });
    }
    let mut psnr = Vec::with_capacity(curve.len());
    let mut log_rate = Vec::with_capacity(curve.len());
    for p in &curve.points {
        if !(p.bits_per_vector > 0.0) || !p.psnr_db.is_finite() || !p.bits_per_vector.is_finite() {
            return Err(Error::NonFinite(format!(
                "curve point rate {} / psnr {}",
                p.bits_per_vector, p.psnr_db
            )));
        }
        psnr.push(p.psnr_db);
        log_rate.push(p.bits_per_vector.log10());
    }
    Ok((psnr, log_rate))
}

/// Bjøntegaard delta rate of `test` against `anchor`, in percent (negative
/// means `test` needs fewer bits at equal PSNR). Each curve's `log₁₀ rate`
/// is fitted by a least-squares cubic in PSNR and both are integrated over
/// the shared PSNR interval.
pub fn bd_rate(anchor: &RDCurve, test: &RDCurve) -> Result<f64> {
    let (pa, ra) = prepare(anchor)?;
    let (pt, rt) = prepare(test)?;
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = min(&pa).max(min(&pt));
    let hi = max(&pa).min(max(&pt));
    if !(hi - lo >= MIN_OVERLAP_DB) {
        return Err(Error::InsufficientOverlap {
            overlap: hi - lo,
            needed: MIN_OVERLAP_DB,
        });
    }
    let fa = Cubic::fit(&pa, &ra)?;
    let ft = Cubic::fit(&pt, &rt)?;
    let avg = (ft.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
    Ok(100.0 * (10f64.powf(avg) - 1.0))
}
