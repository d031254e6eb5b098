use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::wire::{Reader, Writer};
use crate::{Error, Result};

pub const VECTOR_MAGIC: &[u8; 4] = b"LVQV";
pub const VECTOR_VERSION: u16 = 1;

/// Where vectors come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    /// Stationary Gaussian with covariance `variance·ρ^|j-k|`.
    Ar1 {
        dim: usize,
        rho: f64,
        variance: f64,
        count: usize,
        seed: u64,
    },
    File(PathBuf),
}

impl SourceSpec {
    /// Parses `ar1:n=8,rho=0.9,var=1,count=100000[,seed=S]` or `file:PATH`.
    /// `default_seed` applies when the spec names none.
    pub fn parse(text: &str, default_seed: u64) -> Result<Self> {
        if let Some(path) = text.strip_prefix("file:") {
            if path.is_empty() {
                return Err(Error::BadSpec("empty file path".into()));
            }
            return Ok(SourceSpec::File(PathBuf::from(path)));
        }
        let Some(body) = text.strip_prefix("ar1:") else {
            return Err(Error::BadSpec(format!(
                "unknown source '{text}' (want ar1:... or file:PATH)"
            )));
        };
        let (mut dim, mut rho, mut variance, mut count, mut seed) =
            (8, 0.9, 1.0, 100_000, default_seed);
        for item in body.split(',').filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::BadSpec(format!("expected key=value, got '{item}'")))?;
            let bad = || Error::BadSpec(format!("bad value for {key}: '{value}'"));
            match key.trim() {
                "n" | "dim" => dim = value.trim().parse().map_err(|_| bad())?,
                "rho" => rho = value.trim().parse().map_err(|_| bad())?,
                "var" | "variance" => variance = value.trim().parse().map_err(|_| bad())?,
                "count" => count = value.trim().parse().map_err(|_| bad())?,
                "seed" => seed = value.trim().parse().map_err(|_| bad())?,
                other => return Err(Error::BadSpec(format!("unknown ar1 key '{other}'"))),
            }
        }
        Ok(SourceSpec::Ar1 {
            dim,
            rho,
            variance,
            count,
            seed,
        })
    }

    pub fn describe(&self) -> String {
        match self {
            SourceSpec::Ar1 {
                dim,
                rho,
                variance,
                count,
                seed,
            } => format!("ar1:n={dim},rho={rho},var={variance},count={count},seed={seed}"),
            SourceSpec::File(p) => format!("file:{}", p.display()),
        }
    }
}

/// A block of `count × dim` vectors, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSource {
    dim: usize,
    data: Vec<f64>,
}

impl VectorSource {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("source vector".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// First 90% of vectors for training, the rest held out.
    pub fn split(&self) -> (VectorSource, VectorSource) {
        let cut = self.len() * 9 / 10;
        let (a, b) = self.data.split_at(cut * self.dim);
        (
            Self {
                dim: self.dim,
                data: a.to_vec(),
            },
            Self {
                dim: self.dim,
                data: b.to_vec(),
            },
        )
    }

    /// Per-dimension sample mean.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for v in self.data.chunks(self.dim) {
            for (a, b) in m.iter_mut().zip(v) {
                *a += b;
            }
        }
        let n = self.len().max(1) as f64;
        m.iter().map(|a| a / n).collect()
    }

    /// Per-dimension sample standard deviation around [`mean`](Self::mean).
    pub fn std_dev(&self) -> Vec<f64> {
        let mean = self.mean();
        let mut s = vec![0.0; self.dim];
        for v in self.data.chunks(self.dim) {
            for j in 0..self.dim {
                s[j] += (v[j] - mean[j]).powi(2);
            }
        }
        let n = self.len().max(1) as f64;
        s.iter().map(|a| (a / n).sqrt()).collect()
    }

    /// PSNR peak: four times the pooled per-dimension standard deviation.
    pub fn psnr_peak(&self) -> f64 {
        let sd = self.std_dev();
        let pooled = sd.iter().map(|s| s * s).sum::<f64>() / self.dim as f64;
        4.0 * pooled.sqrt()
    }
}

/// Materializes a source.
pub fn gen_source(spec: &SourceSpec) -> Result<VectorSource> {
    match spec {
        SourceSpec::Ar1 {
            dim,
            rho,
            variance,
            count,
            seed,
        } => ar1(*dim, *rho, *variance, *count, *seed),
        SourceSpec::File(path) => read_vectors(path),
    }
}

fn ar1(dim: usize, rho: f64, variance: f64, count: usize, seed: u64) -> Result<VectorSource> {
    if dim == 0 || dim > u16::MAX as usize {
        return Err(Error::BadSpec(format!("dimension {dim} out of range")));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::BadSpec(format!("|rho| must be below 1, got {rho}")));
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::BadSpec(format!(
            "variance must be positive, got {variance}"
        )));
    }
    let cov = DMatrix::from_fn(dim, dim, |j, k| {
        variance * rho.powi((j as i32 - k as i32).abs())
    });
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::BadSpec("covariance is not positive definite".into()))?;
    let l = chol.l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(dim * count);
    let mut z = vec![0.0; dim];
    for _ in 0..count {
        for zj in z.iter_mut() {
            *zj = StandardNormal.sample(&mut rng);
        }
        for j in 0..dim {
            data.push((0..=j).map(|k| l[(j, k)] * z[k]).sum());
        }
    }
    VectorSource::new(dim, data)
}

/// `LVQV` file: magic, version u16, dim u16, count u64, then f32 values.
pub fn vectors_to_bytes(source: &VectorSource) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(VECTOR_MAGIC);
    w.u16(VECTOR_VERSION);
    w.u16(source.dim as u16);
    w.u64(source.len() as u64);
    for &v in &source.data {
        w.f32(v as f32);
    }
    w.buf
}

pub fn vectors_from_bytes(bytes: &[u8]) -> Result<VectorSource> {
    let mut r = Reader::new(bytes, "LVQV vector file");
    r.magic(VECTOR_MAGIC)?;
    let version = r.u16()?;
    if version != VECTOR_VERSION {
        return Err(Error::Format(format!("unsupported LVQV version {version}")));
    }
    let dim = r.u16()? as usize;
    let count = r.u64()? as usize;
    if dim == 0 {
        return Err(Error::Format("LVQV dimension is zero".into()));
    }
    let total = count
        .checked_mul(dim)
        .filter(|t| t.checked_mul(4).is_some_and(|b| b <= bytes.len()))
        .ok_or_else(|| Error::Format("LVQV count exceeds file size".into()))?;
    let mut data = Vec::with_capacity(total);
    for _ in 0..total {
        data.push(f64::from(r.f32()?));
    }
    r.finish()?;
    VectorSource::new(dim, data)
}

pub fn write_vectors(path: &Path, source: &VectorSource) -> Result<()> {
    fs::write(path, vectors_to_bytes(source))?;
    Ok(())
}

pub fn read_vectors(path: &Path) -> Result<VectorSource> {
    vectors_from_bytes(&fs::read(path)?)
}
