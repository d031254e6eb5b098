//! Integer symbols under a discretized Gaussian, mapped to fixed-point
//! frequencies on the fly.
//!
//! Each symbol is coded against a window `[c - A, c + A]` around the rounded
//! mean `c`, with `A = max(32, ceil(12·scale))` (capped so the window fits
//! the 16-bit total), plus one escape slot. Window symbol `j` gets
//! `1 + floor(P_j+1·F) - floor(P_j·F)` counts, where `P` is the Gaussian CDF
//! renormalized to the window and `F = TOTAL - window - 1`. The `+1` is the
//! 2⁻¹⁶ probability floor. Escaped symbols carry their offset from `c` as a
//! 48-bit zigzag value in three raw 16-bit chunks.

use super::gaussian::std_normal_cdf;
use super::pmf::SIGMA_MIN;
use super::range_coder::{RangeDecoder, RangeEncoder, TOTAL};
use crate::{round_half_even, Error, Result};

const MIN_HALF_WIDTH: i64 = 32;
const MAX_HALF_WIDTH: i64 = 8192;
const ESCAPE_BITS: u32 = 48;

/// A Gaussian over integer bins, with mean and scale in bin units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolModel {
    pub mean: f64,
    pub scale: f64,
}

/// The fixed-point view of one [`SymbolModel`].
#[derive(Debug, Clone)]
pub struct FrequencyTable {
    center: i64,
    lo: i64,
    width: u32,
    free: u32,
    cdf_base: f64,
    cdf_span: f64,
    mean: f64,
    scale: f64,
}

impl SymbolModel {
    pub fn new(mean: f64, scale: f64) -> Self {
        Self { mean, scale }
    }

    pub fn table(&self) -> Result<FrequencyTable> {
        if !self.mean.is_finite() || self.mean.abs() > 2f64.powi(52) {
            return Err(Error::AlphabetOverflow {
                symbol: 0,
                reason: format!("model mean {} is not representable", self.mean),
            });
        }
        if !self.scale.is_finite() {
            return Err(Error::AlphabetOverflow {
                symbol: 0,
                reason: format!("model scale {} is not finite", self.scale),
            });
        }
        let scale = self.scale.max(SIGMA_MIN);
        let center = round_half_even(self.mean) as i64;
        let half = ((12.0 * scale).ceil() as i64).clamp(MIN_HALF_WIDTH, MAX_HALF_WIDTH);
        let lo = center - half;
        let width = (2 * half + 1) as u32;
        let edge = |j: i64| std_normal_cdf(((lo + j) as f64 - 0.5 - self.mean) / scale);
        let cdf_base = edge(0);
        let cdf_span = edge(width as i64) - cdf_base;
        Ok(FrequencyTable {
            center,
            lo,
            width,
            free: TOTAL - width - 1,
            cdf_base,
            cdf_span,
            mean: self.mean,
            scale,
        })
    }
}

impl FrequencyTable {
    /// Cumulative count below window slot `j` (`0 ≤ j ≤ width`).
    fn cum(&self, j: u32) -> u32 {
        if j == 0 {
            return 0;
        }
        if j == self.width {
            return self.width + self.free;
        }
        let x = ((self.lo + j as i64) as f64 - 0.5 - self.mean) / self.scale;
        let p = ((std_normal_cdf(x) - self.cdf_base) / self.cdf_span).clamp(0.0, 1.0);
        j + (p * self.free as f64).floor() as u32
    }

    fn escape_start(&self) -> u32 {
        self.width + self.free
    }

    /// Interval `(start, size)` of an in-window symbol, or `None` if it escapes.
    pub fn interval(&self, symbol: i64) -> Option<(u32, u32)> {
        let j = symbol.checked_sub(self.lo)?;
        if j < 0 || j >= self.width as i64 {
            return None;
        }
        let j = j as u32;
        let start = self.cum(j);
        Some((start, self.cum(j + 1) - start))
    }

    /// Probability the coder actually assigns to `symbol`.
    pub fn coded_probability(&self, symbol: i64) -> f64 {
        let size = self.interval(symbol).map_or(1, |(_, size)| size);
        f64::from(size) / f64::from(TOTAL)
    }

    pub fn encode(&self, enc: &mut RangeEncoder, symbol: i64) -> Result<()> {
        if let Some((start, size)) = self.interval(symbol) {
            enc.encode(start, size);
            return Ok(());
        }
        let offset = symbol
            .checked_sub(self.center)
            .ok_or_else(|| overflow(symbol))?;
        if offset.unsigned_abs() >= 1 << (ESCAPE_BITS - 1) {
            return Err(overflow(symbol));
        }
        let zigzag = ((offset << 1) ^ (offset >> 63)) as u64;
        enc.encode(self.escape_start(), 1);
        for chunk in 0..ESCAPE_BITS / 16 {
            enc.encode(((zigzag >> (16 * chunk)) & 0xFFFF) as u32, 1);
        }
        Ok(())
    }

    pub fn decode(&self, dec: &mut RangeDecoder<'_>) -> Result<i64> {
        let v = dec.peek()?;
        if v >= self.escape_start() {
            dec.consume(self.escape_start(), 1);
            let mut zigzag = 0u64;
            for chunk in 0..ESCAPE_BITS / 16 {
                let part = dec.peek()?;
                dec.consume(part, 1);
                zigzag |= u64::from(part) << (16 * chunk);
            }
            let offset = (zigzag >> 1) as i64 ^ -((zigzag & 1) as i64);
            return self
                .center
                .checked_add(offset)
                .ok_or_else(|| Error::CorruptStream("escaped symbol overflows".into()));
        }
        // largest j with cum(j) ≤ v
        let (mut lo, mut hi) = (0u32, self.width);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.cum(mid) <= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let start = self.cum(lo);
        let size = self.cum(lo + 1) - start;
        dec.consume(start, size);
        Ok(self.lo + lo as i64)
    }

    /// Counts of every slot (window then escape); they sum to [`TOTAL`].
    pub fn counts(&self) -> Vec<u32> {
        let mut out: Vec<u32> = (0..self.width)
            .map(|j| self.cum(j + 1) - self.cum(j))
            .collect();
        out.push(TOTAL - self.escape_start());
        out
    }
}

fn overflow(symbol: i64) -> Error {
    Error::AlphabetOverflow {
        symbol,
        reason: format!("escape offset does not fit in {ESCAPE_BITS} bits"),
    }
}
