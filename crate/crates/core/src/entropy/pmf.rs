use std::collections::HashMap;
use std::f64::consts::LN_2;

use super::gaussian::{normal_mass, std_normal_pdf};
use crate::{Error, Result};

/// Smallest admissible model scale.
pub const SIGMA_MIN: f64 = 1e-6;

/// Bin masses below this are clamped in the relaxed rate (≈ 29.9 bits/dim).
pub const MASS_FLOOR: f64 = 1e-9;

/// Mass of bin `k` under `N(mu, sigma²)` integrated over
/// `[k·step - step/2, k·step + step/2]`, i.e. the Gaussian convolved with a
/// uniform of width `step`, sampled on the grid.
pub fn pmf_discrete(k: i64, mu: f64, sigma: f64, step: f64) -> f64 {
    let sigma = sigma.max(SIGMA_MIN);
    let center = k as f64 * step - mu;
    normal_mass((center - 0.5 * step) / sigma, (center + 0.5 * step) / sigma)
}

/// Bits for one relaxed coordinate `x` under a unit-step bin model with scale
/// `sigma_steps`, plus the partial derivatives with respect to `x` and the
/// scale. The derivatives are zero where the mass floor is active.
#[inline]
pub fn rate_term(x: f64, sigma_steps: f64) -> (f64, f64, f64) {
    let a = (x + 0.5) / sigma_steps;
    let b = (x - 0.5) / sigma_steps;
    let mass = normal_mass(b, a);
    if !(mass > MASS_FLOOR) {
        return (-MASS_FLOOR.log2(), 0.0, 0.0);
    }
    let (pa, pb) = (std_normal_pdf(a), std_normal_pdf(b));
    let denom = sigma_steps * mass * LN_2;
    (-mass.log2(), -(pa - pb) / denom, (a * pa - b * pb) / denom)
}

/// Relaxed rate in bits: `Σ -log₂[Φ((x_i+½)/σ̃_i) - Φ((x_i-½)/σ̃_i)]` for noisy
/// coordinates `x` already expressed in quantizer steps.
pub fn rate_relaxed(noisy_coords: &[f64], sigma_steps: &[f64]) -> Result<f64> {
    if noisy_coords.len() != sigma_steps.len() {
        return Err(Error::DimensionMismatch {
            expected: sigma_steps.len(),
            got: noisy_coords.len(),
        });
    }
    Ok(noisy_coords
        .iter()
        .zip(sigma_steps)
        .map(|(&x, &s)| rate_term(x, s.max(SIGMA_MIN)).0)
        .sum())
}

/// Empirical Shannon entropy (bits per symbol) of the symbol histogram.
pub fn estimate_entropy(symbols: &[i64]) -> Result<f64> {
    if symbols.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for &s in symbols {
        *counts.entry(s).or_default() += 1;
    }
    let mut freqs: Vec<usize> = counts.into_values().collect();
    freqs.sort_unstable();
    let total = symbols.len() as f64;
    Ok(freqs
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0))
}
