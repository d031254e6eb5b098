use super::params::EntropyParams;
use super::pmf::pmf_discrete;
use super::range_coder::{RangeDecoder, RangeEncoder};
use super::symbol::SymbolModel;
use crate::lattice::LatticeBasis;
use crate::wire::{Reader, Writer};
use crate::{Error, Result};

pub const STREAM_MAGIC: &[u8; 4] = b"SLVQ";
pub const STREAM_VERSION: u16 = 1;

/// Coded after the last symbol; a mismatch on decode means the payload was
/// truncated or the decoder lost sync.
const SENTINEL: u32 = 0xB5A3;

/// How lattice points are turned into coded integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolLayout {
    /// One integer coordinate per dimension, each under its own zero-mean
    /// model (USQ and learned bases).
    Independent,
    /// Doubled coordinates `2z` of a product-`E8` point, coded per 8-block:
    /// the first coordinate on a half-step grid (revealing the coset), the
    /// next six on the coset's unit grid, the last on a step-2 grid fixed by
    /// the even-sum constraint.
    E8Cosets,
}

/// Everything in front of the payload.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamHeader {
    pub dim: usize,
    /// Number of coded vectors.
    pub count: u64,
    pub step_scale: f64,
    pub q_s: f64,
    pub sigma: Vec<f64>,
    pub mu_g: Vec<f64>,
    /// Basis entries, row-major.
    pub basis: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bitstream {
    pub header: StreamHeader,
    pub payload: Vec<u8>,
}

impl Bitstream {
    pub fn payload_bits(&self) -> u64 {
        8 * self.payload.len() as u64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut w = Writer::new();
        w.bytes(STREAM_MAGIC);
        w.u16(STREAM_VERSION);
        w.u16(h.dim as u16);
        w.u64(h.count);
        w.f64(h.step_scale);
        w.f64(h.q_s);
        w.f64s(&h.sigma);
        w.f64s(&h.mu_g);
        w.f64s(&h.basis);
        w.bytes(&self.payload);
        w.buf
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = Reader::new(data, "SLVQ bitstream");
        r.magic(STREAM_MAGIC)?;
        let version = r.u16()?;
        if version != STREAM_VERSION {
            return Err(Error::Format(format!("unsupported SLVQ version {version}")));
        }
        let dim = r.u16()? as usize;
        let count = r.u64()?;
        let step_scale = r.f64()?;
        let q_s = r.f64()?;
        let sigma = r.f64s(dim)?;
        let mu_g = r.f64s(dim)?;
        let basis = r.f64s(dim * dim)?;
        let payload = r.rest().to_vec();
        Ok(Self {
            header: StreamHeader {
                dim,
                count,
                step_scale,
                q_s,
                sigma,
                mu_g,
                basis,
            },
            payload,
        })
    }
}

/// Range-codes `symbols` (vector-major, `dim` per vector) under the
/// integrated-Gaussian model with effective step `step_scale·q_s`.
pub fn encode(
    symbols: &[i64],
    params: &EntropyParams,
    basis: &LatticeBasis,
    step_scale: f64,
    layout: SymbolLayout,
) -> Result<Bitstream> {
    let dim = params.dim();
    check_setup(dim, basis, step_scale, layout)?;
    if !symbols.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch {
            expected: dim * symbols.len().div_ceil(dim),
            got: symbols.len(),
        });
    }
    let scales = params.sigma_steps(step_scale);
    let mut enc = RangeEncoder::new();
    for vector in symbols.chunks(dim) {
        for_each_model(vector, &scales, layout, |model, value| {
            model.table()?.encode(&mut enc, value)
        })?;
    }
    enc.encode(SENTINEL, 1);

    Ok(Bitstream {
        header: StreamHeader {
            dim,
            count: (symbols.len() / dim) as u64,
            step_scale,
            q_s: params.q_s,
            sigma: params.sigma.clone(),
            mu_g: params.mu_g.clone(),
            basis: basis.to_row_major(),
        },
        payload: enc.finish(),
    })
}

/// Inverse of [`encode`]; `count` is the number of vectors.
pub fn decode(
    stream: &Bitstream,
    params: &EntropyParams,
    step_scale: f64,
    count: usize,
    layout: SymbolLayout,
) -> Result<Vec<i64>> {
    let h = &stream.header;
    let dim = params.dim();
    let same = |a: &[f64], b: &[f64]| {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
    };
    if h.dim != dim {
        return Err(Error::HeaderMismatch(format!(
            "stream dim {} vs model dim {dim}",
            h.dim
        )));
    }
    if h.count != count as u64 {
        return Err(Error::HeaderMismatch(format!(
            "stream holds {} vectors, {count} requested",
            h.count
        )));
    }
    if h.step_scale.to_bits() != step_scale.to_bits() || h.q_s.to_bits() != params.q_s.to_bits() {
        return Err(Error::HeaderMismatch("quantization step differs".into()));
    }
    if !same(&h.sigma, &params.sigma) || !same(&h.mu_g, &params.mu_g) {
        return Err(Error::HeaderMismatch("entropy parameters differ".into()));
    }
    if layout == SymbolLayout::E8Cosets && !dim.is_multiple_of(8) {
        return Err(Error::BadSpec(format!(
            "E8 layout needs dim divisible by 8, got {dim}"
        )));
    }

    let scales = params.sigma_steps(step_scale);
    let mut dec = RangeDecoder::new(&stream.payload);
    let mut out = Vec::with_capacity(count * dim);
    for _ in 0..count {
        decode_vector(&mut dec, &scales, layout, &mut out)?;
    }
    if dec.peek()? != SENTINEL {
        return Err(Error::CorruptStream("end-of-stream check failed".into()));
    }
    dec.consume(SENTINEL, 1);
    dec.check_fully_consumed()?;
    Ok(out)
}

/// Ideal code length `Σ -log₂ pmf(symbol)` under the continuous model.
pub fn model_cost_bits(
    symbols: &[i64],
    params: &EntropyParams,
    step_scale: f64,
    layout: SymbolLayout,
) -> Result<f64> {
    let dim = params.dim();
    let scales = params.sigma_steps(step_scale);
    let mut bits = 0.0;
    for vector in symbols.chunks(dim) {
        for_each_model(vector, &scales, layout, |model, value| {
            bits -= pmf_discrete(value, model.mean, model.scale, 1.0).log2();
            Ok(())
        })?;
    }
    Ok(bits)
}

fn check_setup(
    dim: usize,
    basis: &LatticeBasis,
    step_scale: f64,
    layout: SymbolLayout,
) -> Result<()> {
    if dim == 0 || dim > u16::MAX as usize {
        return Err(Error::BadSpec(format!("stream dim {dim} out of range")));
    }
    if basis.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: basis.dim(),
        });
    }
    if !(step_scale > 0.0 && step_scale.is_finite()) {
        return Err(Error::BadSpec(format!(
            "step scale must be positive, got {step_scale}"
        )));
    }
    if layout == SymbolLayout::E8Cosets && !dim.is_multiple_of(8) {
        return Err(Error::BadSpec(format!(
            "E8 layout needs dim divisible by 8, got {dim}"
        )));
    }
    Ok(())
}

fn not_e8(symbol: i64) -> Error {
    Error::AlphabetOverflow {
        symbol,
        reason: "not a doubled E8 coordinate".into(),
    }
}

/// Walks one vector, handing each coded integer and its model to `f`.
fn for_each_model<F>(vector: &[i64], scales: &[f64], layout: SymbolLayout, mut f: F) -> Result<()>
where
    F: FnMut(SymbolModel, i64) -> Result<()>,
{
    match layout {
        SymbolLayout::Independent => {
            for (&value, &scale) in vector.iter().zip(scales) {
                f(SymbolModel::new(0.0, scale), value)?;
            }
        }
        SymbolLayout::E8Cosets => {
            for (block, s) in vector.chunks(8).zip(scales.chunks(8)) {
                let first = block[0];
                f(SymbolModel::new(0.0, 2.0 * s[0]), first)?;
                let parity = first.rem_euclid(2);
                let mut acc = first;
                for i in 1..7 {
                    let w = block[i];
                    let shifted = w.checked_sub(parity).ok_or_else(|| not_e8(w))?;
                    if shifted.rem_euclid(2) != 0 {
                        return Err(not_e8(w));
                    }
                    f(
                        SymbolModel::new(-(parity as f64) / 2.0, s[i]),
                        shifted.div_euclid(2),
                    )?;
                    acc = acc.checked_add(w).ok_or_else(|| not_e8(w))?;
                }
                let w = block[7];
                let residue = acc.checked_neg().ok_or_else(|| not_e8(w))?.rem_euclid(4);
                let shifted = w.checked_sub(residue).ok_or_else(|| not_e8(w))?;
                if shifted.rem_euclid(4) != 0 {
                    return Err(not_e8(w));
                }
                f(
                    SymbolModel::new(-(residue as f64) / 4.0, s[7] / 2.0),
                    shifted.div_euclid(4),
                )?;
            }
        }
    }
    Ok(())
}

fn decode_vector(
    dec: &mut RangeDecoder<'_>,
    scales: &[f64],
    layout: SymbolLayout,
    out: &mut Vec<i64>,
) -> Result<()> {
    let corrupt = || Error::CorruptStream("decoded E8 coordinate overflows".into());
    match layout {
        SymbolLayout::Independent => {
            for &scale in scales {
                out.push(SymbolModel::new(0.0, scale).table()?.decode(dec)?);
            }
        }
        SymbolLayout::E8Cosets => {
            for s in scales.chunks(8) {
                let first = SymbolModel::new(0.0, 2.0 * s[0]).table()?.decode(dec)?;
                out.push(first);
                let parity = first.rem_euclid(2);
                let mut acc = first;
                for &scale in &s[1..7] {
                    let m = SymbolModel::new(-(parity as f64) / 2.0, scale)
                        .table()?
                        .decode(dec)?;
                    let w = m
                        .checked_mul(2)
                        .and_then(|v| v.checked_add(parity))
                        .ok_or_else(corrupt)?;
                    acc = acc.checked_add(w).ok_or_else(corrupt)?;
                    out.push(w);
                }
                let residue = acc.checked_neg().ok_or_else(corrupt)?.rem_euclid(4);
                let j = SymbolModel::new(-(residue as f64) / 4.0, s[7] / 2.0)
                    .table()?
                    .decode(dec)?;
                let w = j
                    .checked_mul(4)
                    .and_then(|v| v.checked_add(residue))
                    .ok_or_else(corrupt)?;
                out.push(w);
            }
        }
    }
    Ok(())
}
