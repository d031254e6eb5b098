use std::fmt::Write as _;

use rayon::prelude::*;

use super::model::{QuantizerKind, TrainedModel};
use super::source::VectorSource;
use super::train::{train, TrainConfig};
use crate::entropy::Bitstream;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "lambda,target,bits_per_vector,mse,psnr_db";

/// One operating point measured from a real bitstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RDPoint {
    pub lambda: f64,
    pub target: usize,
    /// Payload bits divided by the vector count (header excluded).
    pub bits_per_vector: f64,
    /// Mean squared error per dimension.
    pub mse: f64,
    pub psnr_db: f64,
}

/// Points sorted by ascending rate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RDCurve {
    pub points: Vec<RDPoint>,
}

impl RDCurve {
    pub fn new(mut points: Vec<RDPoint>) -> Self {
        points.sort_by(|a, b| a.bits_per_vector.total_cmp(&b.bits_per_vector));
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{}",
                p.lambda, p.target, p.bits_per_vector, p.mse, p.psnr_db
            )
            .unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            Some(h) => return Err(Error::Format(format!("unexpected CSV header '{h}'"))),
            None => return Err(Error::Format("empty CSV".into())),
        }
        let mut points = Vec::new();
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Format(format!("malformed CSV row {}: '{line}'", row + 1));
            if fields.len() != 5 {
                return Err(bad());
            }
            let num = |i: usize| fields[i].parse::<f64>().map_err(|_| bad());
            points.push(RDPoint {
                lambda: num(0)?,
                target: fields[1].parse().map_err(|_| bad())?,
                bits_per_vector: num(2)?,
                mse: num(3)?,
                psnr_db: num(4)?,
            });
        }
        Ok(Self::new(points))
    }
}

/// Compresses `source` at `target`, decodes the serialized stream, checks the
/// decoder reproduces the encoder's reconstructions bit for bit, and measures
/// rate and distortion. PSNR uses [`VectorSource::psnr_peak`] of `source`.
pub fn evaluate(model: &TrainedModel, source: &VectorSource, target: usize) -> Result<RDPoint> {
    if source.is_empty() {
        return Err(Error::EmptyInput);
    }
    if source.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: source.dim(),
        });
    }
    let (stream, recon) = model.compress(source.data(), target)?;
    let decoded = model.decompress(&Bitstream::from_bytes(&stream.to_bytes())?)?;
    if let Some(index) = recon
        .iter()
        .zip(&decoded)
        .position(|(a, b)| a.to_bits() != b.to_bits())
    {
        return Err(Error::RoundTripMismatch { index });
    }
    if decoded.len() != recon.len() {
        return Err(Error::RoundTripMismatch {
            index: decoded.len().min(recon.len()),
        });
    }
    let mse = recon
        .iter()
        .zip(source.data())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / source.data().len() as f64;
    let peak = source.psnr_peak();
    Ok(RDPoint {
        lambda: model.gains.lambda(target)?,
        target,
        bits_per_vector: stream.payload_bits() as f64 / source.len() as f64,
        mse,
        psnr_db: 10.0 * (peak * peak / mse).log10(),
    })
}

/// Every target of a (multirate) model.
pub fn evaluate_all(model: &TrainedModel, source: &VectorSource) -> Result<RDCurve> {
    (0..model.gains.len())
        .map(|t| evaluate(model, source, t))
        .collect::<Result<Vec<_>>>()
        .map(RDCurve::new)
}

/// Trains one single-rate model per λ on the training split and evaluates
/// each on that same split. Up to `jobs` models train concurrently; the
/// result does not depend on `jobs`.
pub fn sweep(
    source: &VectorSource,
    lambdas: &[f64],
    kind: QuantizerKind,
    config: &TrainConfig,
    jobs: usize,
) -> Result<RDCurve> {
    Ok(RDCurve::new(
        sweep_models(source, lambdas, kind, config, jobs)?
            .into_iter()
            .map(|(_, p)| p)
            .collect(),
    ))
}

/// [`sweep`], also returning the trained models in λ order.
pub fn sweep_models(
    source: &VectorSource,
    lambdas: &[f64],
    kind: QuantizerKind,
    config: &TrainConfig,
    jobs: usize,
) -> Result<Vec<(TrainedModel, RDPoint)>> {
    if lambdas.is_empty() {
        return Err(Error::BadSpec("sweep needs at least one lambda".into()));
    }
    for (i, a) in lambdas.iter().enumerate() {
        if lambdas[..i].contains(a) {
            return Err(Error::BadSpec(format!("duplicate lambda {a}")));
        }
    }
    let (train_split, _) = source.split();
    let run = |&lambda: &f64| -> Result<(TrainedModel, RDPoint)> {
        let cfg = TrainConfig {
            lambdas: vec![lambda],
            ..config.clone()
        };
        let model = train(&train_split, &cfg, kind)?;
        let point = evaluate(&model, &train_split, 0)?;
        Ok((model, point))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::BadSpec(format!("thread pool: {e}")))?;
    pool.install(|| lambdas.par_iter().map(run).collect())
}
