use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::adaptive::{self, materialize, skew_len, BasisParams};
use crate::entropy::{self, Bitstream, EntropyParams, SymbolLayout};
use crate::lattice::{e8_generator, nearest_e8_embedding, LatticeBasis};
use crate::rate_control::GainVector;
use crate::wire::{Reader, Writer};
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"SLVM";
pub const MODEL_VERSION: u16 = 1;

/// Which quantizer a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantizerKind {
    /// Scalar rounding, basis fixed at the identity.
    Usq,
    /// Exact product-`E8` quantization, basis fixed.
    FixedE8,
    /// Learned basis with Babai rounding.
    Salvq,
}

impl QuantizerKind {
    pub fn name(self) -> &'static str {
        match self {
            QuantizerKind::Usq => "usq",
            QuantizerKind::FixedE8 => "e8",
            QuantizerKind::Salvq => "salvq",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "usq" => Ok(QuantizerKind::Usq),
            "e8" | "fixed_e8" => Ok(QuantizerKind::FixedE8),
            "salvq" => Ok(QuantizerKind::Salvq),
            other => Err(Error::BadSpec(format!(
                "unknown quantizer '{other}' (want usq, e8, salvq)"
            ))),
        }
    }

    fn code(self) -> u16 {
        match self {
            QuantizerKind::Usq => 0,
            QuantizerKind::FixedE8 => 1,
            QuantizerKind::Salvq => 2,
        }
    }

    fn from_code(code: u16) -> Result<Self> {
        match code {
            0 => Ok(QuantizerKind::Usq),
            1 => Ok(QuantizerKind::FixedE8),
            2 => Ok(QuantizerKind::Salvq),
            _ => Err(Error::Format(format!("unknown quantizer code {code}"))),
        }
    }

    pub fn layout(self) -> SymbolLayout {
        match self {
            QuantizerKind::FixedE8 => SymbolLayout::E8Cosets,
            _ => SymbolLayout::Independent,
        }
    }

    /// Checks that the quantizer supports `dim`.
    pub fn check_dim(self, dim: usize) -> Result<()> {
        if dim == 0 || dim > u16::MAX as usize {
            return Err(Error::BadSpec(format!("dimension {dim} out of range")));
        }
        if self == QuantizerKind::FixedE8 && !dim.is_multiple_of(8) {
            return Err(Error::BadSpec(format!(
                "the e8 quantizer needs a dimension divisible by 8, got {dim}"
            )));
        }
        Ok(())
    }
}

/// Everything needed to encode and decode: quantizer kind, basis parameters,
/// entropy model and per-target gains.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: QuantizerKind,
    pub basis: BasisParams,
    pub entropy: EntropyParams,
    pub gains: GainVector,
}

/// Block-diagonal copies of the unit-volume `E8` generator.
fn product_e8(dim: usize) -> Result<LatticeBasis> {
    let g = e8_generator();
    let gi = g.inverse().clone();
    let g = g.matrix().clone();
    let mut m = DMatrix::zeros(dim, dim);
    let mut mi = DMatrix::zeros(dim, dim);
    for b in (0..dim).step_by(8) {
        m.view_mut((b, b), (8, 8)).copy_from(&g);
        mi.view_mut((b, b), (8, 8)).copy_from(&gi);
    }
    LatticeBasis::with_inverse(m, mi, 1.0)
}

impl TrainedModel {
    pub fn dim(&self) -> usize {
        self.basis.dim
    }

    /// The generator recorded in bitstream headers.
    pub fn lattice_basis(&self) -> Result<LatticeBasis> {
        match self.kind {
            QuantizerKind::Usq => Ok(LatticeBasis::identity(self.dim())),
            QuantizerKind::FixedE8 => product_e8(self.dim()),
            QuantizerKind::Salvq => materialize(&self.basis),
        }
    }

    /// Integer symbols for one vector at the given gain.
    fn quantize(&self, basis: &LatticeBasis, vector: &[f64], gain: f64) -> Result<Vec<i64>> {
        match self.kind {
            QuantizerKind::FixedE8 => {
                let step = gain * self.entropy.q_s;
                let x: Vec<f64> = vector
                    .iter()
                    .zip(&self.entropy.mu_g)
                    .map(|(f, m)| (f - m) / step)
                    .collect();
                if x.iter().any(|v| !(v.abs() < 2f64.powi(50))) {
                    return Err(Error::NonFinite("scaled input".into()));
                }
                // symbols are 2z, integers for both E8 cosets
                Ok(x.chunks(8)
                    .flat_map(nearest_e8_embedding)
                    .map(|z| (2.0 * z) as i64)
                    .collect())
            }
            _ => adaptive::quantize_coords(basis, &self.entropy, vector, gain),
        }
    }

    fn reconstruct(&self, basis: &LatticeBasis, symbols: &[i64], gain: f64) -> Vec<f64> {
        match self.kind {
            QuantizerKind::FixedE8 => {
                let step = gain * self.entropy.q_s;
                symbols
                    .iter()
                    .zip(&self.entropy.mu_g)
                    .map(|(&w, m)| step * (w as f64 * 0.5) + m)
                    .collect()
            }
            _ => adaptive::reconstruct(basis, &self.entropy, symbols, gain),
        }
    }

    /// Coded symbols and encoder-side reconstructions for `vectors` (flat).
    pub fn quantize_all(&self, vectors: &[f64], target: usize) -> Result<(Vec<i64>, Vec<f64>)> {
        let n = self.dim();
        if !vectors.len().is_multiple_of(n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: vectors.len() % n,
            });
        }
        let gain = self.gains.gain(target)?;
        let basis = self.lattice_basis()?;
        let mut symbols = Vec::with_capacity(vectors.len());
        let mut recon = Vec::with_capacity(vectors.len());
        for v in vectors.chunks(n) {
            let s = self.quantize(&basis, v, gain)?;
            recon.extend(self.reconstruct(&basis, &s, gain));
            symbols.extend(s);
        }
        Ok((symbols, recon))
    }

    /// Quantizes and codes `vectors` (flat) at `target`; returns the stream
    /// and the encoder-side reconstructions.
    pub fn compress(&self, vectors: &[f64], target: usize) -> Result<(Bitstream, Vec<f64>)> {
        let (symbols, recon) = self.quantize_all(vectors, target)?;
        let gain = self.gains.gain(target)?;
        let basis = self.lattice_basis()?;
        let stream = entropy::encode(&symbols, &self.entropy, &basis, gain, self.kind.layout())?;
        Ok((stream, recon))
    }

    /// Ideal code length of `vectors` at `target` under the model, in bits.
    pub fn model_bits(&self, vectors: &[f64], target: usize) -> Result<f64> {
        let (symbols, _) = self.quantize_all(vectors, target)?;
        entropy::model_cost_bits(
            &symbols,
            &self.entropy,
            self.gains.gain(target)?,
            self.kind.layout(),
        )
    }

    /// Which target produced `stream`, matched on the recorded gain.
    pub fn target_of(&self, stream: &Bitstream) -> Result<usize> {
        let g = stream.header.step_scale.to_bits();
        (0..self.gains.len())
            .find(|&i| self.gains.gain(i).is_ok_and(|v| v.to_bits() == g))
            .ok_or_else(|| {
                Error::HeaderMismatch("stream gain matches no target of this model".into())
            })
    }

    /// Decodes a stream produced by [`compress`](Self::compress).
    pub fn decompress(&self, stream: &Bitstream) -> Result<Vec<f64>> {
        let target = self.target_of(stream)?;
        let gain = self.gains.gain(target)?;
        let basis = self.lattice_basis()?;
        if stream.header.basis.len() != basis.dim() * basis.dim()
            || stream
                .header
                .basis
                .iter()
                .zip(basis.to_row_major())
                .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(Error::HeaderMismatch("basis differs from the model".into()));
        }
        let count = usize::try_from(stream.header.count)
            .map_err(|_| Error::HeaderMismatch("vector count overflows".into()))?;
        let symbols = entropy::decode(stream, &self.entropy, gain, count, self.kind.layout())?;
        Ok(symbols
            .chunks(self.dim())
            .flat_map(|s| self.reconstruct(&basis, s, gain))
            .collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(MODEL_MAGIC);
        w.u16(MODEL_VERSION);
        w.u16(self.kind.code());
        w.u16(self.dim() as u16);
        w.u16(self.gains.len() as u16);
        w.f64s(&self.basis.to_flat());
        w.f64s(&self.entropy.sigma);
        w.f64s(&self.entropy.mu_g);
        w.f64(self.entropy.q_s);
        w.f64s(self.gains.lambdas());
        w.f64s(&self.gains.log_gains);
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "SLVM model file");
        r.magic(MODEL_MAGIC)?;
        let version = r.u16()?;
        if version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported SLVM version {version}")));
        }
        let kind = QuantizerKind::from_code(r.u16()?)?;
        let dim = r.u16()? as usize;
        let m = r.u16()? as usize;
        kind.check_dim(dim)
            .map_err(|e| Error::Format(e.to_string()))?;
        let basis = BasisParams::from_flat(dim, &r.f64s(2 * skew_len(dim) + dim)?)?;
        let sigma = r.f64s(dim)?;
        let mu = r.f64s(dim)?;
        let q_s = r.f64()?;
        let lambdas = r.f64s(m)?;
        let log_gains = r.f64s(m)?;
        r.finish()?;
        let invalid = |e: Error| Error::Format(format!("invalid model: {e}"));
        let entropy = EntropyParams::new(sigma, mu, q_s).map_err(invalid)?;
        let gains = GainVector::with_log_gains(log_gains, lambdas).map_err(invalid)?;
        Ok(Self {
            kind,
            basis,
            entropy,
            gains,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
