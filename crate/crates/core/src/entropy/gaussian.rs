//! Standard normal CDF/PDF built on `libm::erfc`, which is a pure software
//! implementation and therefore bit-identical across platforms.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `Φ(x)`. Negative arguments go straight to `erfc` so small tail values keep
/// full relative precision.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * libm::erfc(x * FRAC_1_SQRT_2)
    }
}

/// Upper tail `1 - Φ(x)`.
pub fn std_normal_sf(x: f64) -> f64 {
    std_normal_cdf(-x)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / (2.0 * PI).sqrt()
}

/// `Φ(hi) - Φ(lo)` for `lo ≤ hi`, evaluated on whichever tail avoids
/// cancellation.
pub fn normal_mass(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        std_normal_sf(lo) - std_normal_sf(hi)
    } else if hi <= 0.0 {
        std_normal_cdf(hi) - std_normal_cdf(lo)
    } else {
        1.0 - std_normal_sf(hi) - std_normal_cdf(lo)
    }
}
