use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{cell_volume, Quantizer};
use crate::Result;

const CHUNK: usize = 1 << 16;

/// Monte Carlo estimate of the normalized second moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsmEstimate {
    pub nsm: f64,
    pub std_err: f64,
    pub samples: usize,
}

/// Estimates `G = E‖e‖² / (n·V^{2/n})` where `e` is the quantization error of
/// points drawn uniformly from one fundamental cell (`B·w`, `w ~ U[0,1)ⁿ`).
///
/// With an exact quantizer this is the Voronoi-cell NSM; with Babai rounding
/// on an arbitrary basis it measures the Babai partition cell instead.
/// Samples are split into fixed chunks, each drawn from its own ChaCha stream,
/// so the result depends only on `seed`.
pub fn nsm_monte_carlo<Q: Quantizer + ?Sized>(
    quantizer: &Q,
    samples: usize,
    seed: u64,
) -> Result<NsmEstimate> {
    let samples = samples.max(1);
    let n = quantizer.dim();
    let basis = quantizer.basis();
    let norm = n as f64 * cell_volume(basis).powf(2.0 / n as f64);
    let chunks = samples.div_ceil(CHUNK);

    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<(f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = CHUNK.min(samples - chunk * CHUNK);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            let mut w = DVector::zeros(n);
            for _ in 0..count {
                for v in w.iter_mut() {
                    *v = rng.random::<f64>();
                }
                let y: Vec<f64> = (basis.matrix() * &w).iter().copied().collect();
                let g = quantizer.quantize(&y)?.distance_squared(&y) / norm;
                sum += g;
                sum_sq += g * g;
            }
            Ok((sum, sum_sq))
        })
        .collect::<Result<_>>()?;

    let (sum, sum_sq) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let count = samples as f64;
    let mean = sum / count;
    let var = (sum_sq / count - mean * mean).max(0.0) * count / (count - 1.0).max(1.0);
    Ok(NsmEstimate {
        nsm: mean,
        std_err: (var / count).sqrt(),
        samples,
    })
}
