//! Byte-oriented range coder with carry propagation.
//!
//! 33-bit `low` with a cached output byte and a run of pending `0xFF` bytes
//! absorbs carries; the range is renormalized to stay at or above 2²⁴.
//! Frequencies are 16-bit fixed point. Everything here is integer arithmetic.

use crate::{Error, Result};

pub const PRECISION_BITS: u32 = 16;
pub const TOTAL: u32 = 1 << PRECISION_BITS;
const TOP: u32 = 1 << 24;

pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    pending: u64,
    leading: bool,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            pending: 1,
            leading: true,
            out: Vec::new(),
        }
    }

    /// Codes the interval `[start, start + size)` out of [`TOTAL`].
    pub fn encode(&mut self, start: u32, size: u32) {
        debug_assert!(size > 0 && start + size <= TOTAL);
        let r = self.range >> PRECISION_BITS;
        self.low += u64::from(r) * u64::from(start);
        self.range = r * size;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.emit(byte.wrapping_add(carry));
                byte = 0xFF;
                self.pending -= 1;
                if self.pending == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.pending += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    fn emit(&mut self, byte: u8) {
        // The first byte stands for the integer part of the code value, which
        // is always 0 because the interval never leaves [0, 1).
        if self.leading {
            debug_assert_eq!(byte, 0);
            self.leading = false;
        } else {
            self.out.push(byte);
        }
    }

    /// Picks the value in `[low, low + range)` with the most trailing zero
    /// bytes, flushes it, and drops trailing zeros (the decoder reads zeros
    /// past the end).
    pub fn finish(mut self) -> Vec<u8> {
        let high = self.low + u64::from(self.range);
        for k in 0..=4u32 {
            let unit = 1u64 << (32 - 8 * k);
            let v = self.low.div_ceil(unit) * unit;
            if v < high {
                self.low = v;
                break;
            }
        }
        for _ in 0..5 {
            self.shift_low();
        }
        while self.out.last() == Some(&0) {
            self.out.pop();
        }
        self.out
    }
}

pub struct RangeDecoder<'a> {
    data: &'a [u8],
    pos: usize,
    code: u32,
    range: u32,
    window: u32,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        let mut dec = Self {
            data,
            pos: 0,
            code: 0,
            range: u32::MAX,
            window: 0,
        };
        for _ in 0..4 {
            dec.code = (dec.code << 8) | u32::from(dec.next_byte());
        }
        dec
    }

    fn next_byte(&mut self) -> u8 {
        let b = self.data.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        self.window = (self.window << 8) | u32::from(b);
        b
    }

    /// The cumulative frequency the next symbol falls on.
    pub fn peek(&self) -> Result<u32> {
        let r = self.range >> PRECISION_BITS;
        let v = self.code / r;
        if v >= TOTAL {
            return Err(Error::CorruptStream(format!(
                "code value outside the coding interval at byte {}",
                self.pos
            )));
        }
        Ok(v)
    }

    /// Consumes the interval `[start, start + size)` identified from [`peek`](Self::peek).
    pub fn consume(&mut self, start: u32, size: u32) {
        let r = self.range >> PRECISION_BITS;
        self.code -= r * start;
        self.range = r * size;
        while self.range < TOP {
            self.code = (self.code << 8) | u32::from(self.next_byte());
            self.range <<= 8;
        }
    }

    /// Fails if bytes remain that no symbol consumed, or if the final code
    /// value is not the one [`RangeEncoder::finish`] would have written.
    pub fn check_fully_consumed(&self) -> Result<()> {
        if self.data.len() > self.pos {
            return Err(Error::CorruptStream(format!(
                "{} unread payload bytes",
                self.data.len() - self.pos
            )));
        }
        // `low` is only known modulo 2^32 here, which is enough: every flush
        // unit divides 2^32.
        let low = u64::from(self.window.wrapping_sub(self.code));
        let high = low + u64::from(self.range);
        for k in 0..=4u32 {
            let unit = 1u64 << (32 - 8 * k);
            let v = low.div_ceil(unit) * unit;
            if v < high {
                if v as u32 != self.window {
                    return Err(Error::CorruptStream("trailing garbage in payload".into()));
                }
                return Ok(());
            }
        }
        Ok(())
    }
}
