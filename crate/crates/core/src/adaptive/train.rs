use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::params::{BasisParams, Factors};
use crate::entropy::{rate_term, EntropyParams, SIGMA_MIN};
use crate::lattice::LatticeBasis;
use crate::{round_half_even, Error, Result};

/// Shape of the additive noise that stands in for quantization error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Uniform on `[-½, ½)ⁿ`, the cell of `Zⁿ` (and of any basis in its own
    /// coordinates).
    Cube,
    /// Uniform on the Voronoi cell of `E8`, per 8-block.
    E8Cell,
}

impl NoiseKind {
    pub fn sample<R: Rng>(self, dim: usize, count: usize, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            NoiseKind::Cube => Ok((0..dim * count)
                .map(|_| rng.random_range(-0.5..0.5))
                .collect()),
            NoiseKind::E8Cell => {
                if !dim.is_multiple_of(8) {
                    return Err(Error::BadSpec(format!(
                        "E8 noise needs dim divisible by 8, got {dim}"
                    )));
                }
                // [0, 2)⁸ tiles space under 2Z⁸ ⊂ E8, so y - Q(y) is uniform on the cell.
                let mut out = Vec::with_capacity(dim * count);
                for _ in 0..dim * count / 8 {
                    let y: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..2.0)).collect();
                    let z = crate::lattice::nearest_e8_embedding(&y);
                    out.extend(y.iter().zip(&z).map(|(a, b)| a - b));
                }
                Ok(out)
            }
        }
    }
}

/// Feature vectors and their noise, both stored one vector per column.
#[derive(Debug, Clone)]
pub struct TrainingBatch {
    vectors: DMatrix<f64>,
    noise: DMatrix<f64>,
}

impl TrainingBatch {
    /// `vectors` and `noise` are flat, `dim` values per vector; cube noise
    /// entries must lie in `[-½, ½)`.
    pub fn new(dim: usize, vectors: &[f64], noise: &[f64]) -> Result<Self> {
        if noise.iter().any(|e| !(-0.5..0.5).contains(e)) {
            return Err(Error::BadSpec(
                "noise entries must lie in [-0.5, 0.5)".into(),
            ));
        }
        Self::build(dim, vectors, noise)
    }

    pub fn sample<R: Rng>(
        dim: usize,
        vectors: &[f64],
        kind: NoiseKind,
        rng: &mut R,
    ) -> Result<Self> {
        let count = vectors.len() / dim.max(1);
        let noise = kind.sample(dim, count, rng)?;
        Self::build(dim, vectors, &noise)
    }

    /// Zero noise: the forward pass becomes an exact transform round trip.
    pub fn noiseless(dim: usize, vectors: &[f64]) -> Result<Self> {
        Self::build(dim, vectors, &vec![0.0; vectors.len()])
    }

    fn build(dim: usize, vectors: &[f64], noise: &[f64]) -> Result<Self> {
        if dim == 0 || !vectors.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: vectors.len(),
            });
        }
        if noise.len() != vectors.len() {
            return Err(Error::DimensionMismatch {
                expected: vectors.len(),
                got: noise.len(),
            });
        }
        if vectors.is_empty() {
            return Err(Error::EmptyInput);
        }
        if vectors.iter().chain(noise).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training batch".into()));
        }
        let count = vectors.len() / dim;
        Ok(Self {
            vectors: DMatrix::from_column_slice(dim, count, vectors),
            noise: DMatrix::from_column_slice(dim, count, noise),
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// Flat, `dim` values per vector.
    pub reconstructions: Vec<f64>,
    /// Relaxed bits per vector.
    pub rate_bits: Vec<f64>,
    /// Mean squared error per dimension.
    pub mse: f64,
}

impl ForwardOutput {
    pub fn mean_rate(&self) -> f64 {
        self.rate_bits.iter().sum::<f64>() / self.rate_bits.len() as f64
    }

    /// `mse + λ·mean(rate_bits)`.
    pub fn loss(&self, lambda: f64) -> f64 {
        self.mse + lambda * self.mean_rate()
    }
}

/// Gradients of `L = mse + λ·mean(rate_bits)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradients {
    pub d_skew_u: Vec<f64>,
    pub d_skew_v: Vec<f64>,
    pub d_log_sigma: Vec<f64>,
    pub d_sigma: Vec<f64>,
    pub d_mu_g: Vec<f64>,
    pub d_q_s: f64,
    pub d_step_scale: f64,
    pub loss: f64,
    pub mse: f64,
    pub mean_rate: f64,
}

impl ParamGradients {
    /// In the layout of [`BasisParams::to_flat`].
    pub fn basis_flat(&self) -> Vec<f64> {
        let mut out = self.d_skew_u.clone();
        out.extend(&self.d_skew_v);
        out.extend(&self.d_log_sigma);
        out
    }
}

struct Pass {
    centered: DMatrix<f64>,
    transformed: DMatrix<f64>,
    noisy: DMatrix<f64>,
    scaled: DMatrix<f64>,
    residual: DMatrix<f64>,
    reconstructions: DMatrix<f64>,
    rate_bits: Vec<f64>,
    d_rate_dx: DMatrix<f64>,
    d_rate_dscale: DVector<f64>,
    scale_active: Vec<bool>,
    mse: f64,
}

fn check_inputs(
    params: &BasisParams,
    entropy: &EntropyParams,
    batch: &TrainingBatch,
    step_scale: f64,
) -> Result<f64> {
    let n = params.dim;
    for got in [entropy.dim(), batch.dim()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    let step = step_scale * entropy.q_s;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::NonFinite(format!("effective step {step}")));
    }
    Ok(step)
}

fn run(
    factors: &Factors,
    entropy: &EntropyParams,
    batch: &TrainingBatch,
    step: f64,
) -> Result<Pass> {
    let (n, count) = batch.vectors.shape();
    let mu = DVector::from_column_slice(&entropy.mu_g);
    let mut centered = batch.vectors.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mu;
    }
    let transformed = factors.basis.inverse() * &centered;
    let noisy = &transformed / step + &batch.noise;
    let scaled = &noisy * step;
    let mut reconstructions = factors.basis.matrix() * &scaled;
    for mut col in reconstructions.column_iter_mut() {
        col += &mu;
    }
    let residual = &batch.vectors - &reconstructions;
    let mse = residual.norm_squared() / (n * count) as f64;

    let scale_steps: Vec<f64> = entropy.sigma.iter().map(|s| s / step).collect();
    let scale_active: Vec<bool> = scale_steps.iter().map(|&s| s >= SIGMA_MIN).collect();
    let mut rate_bits = vec![0.0; count];
    let mut d_rate_dx = DMatrix::zeros(n, count);
    let mut d_rate_dscale = DVector::zeros(n);
    for i in 0..count {
        for j in 0..n {
            let (bits, dx, ds) = rate_term(noisy[(j, i)], scale_steps[j].max(SIGMA_MIN));
            rate_bits[i] += bits;
            d_rate_dx[(j, i)] = dx;
            d_rate_dscale[j] += ds;
        }
    }
    if !mse.is_finite() || rate_bits.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("forward pass".into()));
    }
    Ok(Pass {
        centered,
        transformed,
        noisy,
        scaled,
        residual,
        reconstructions,
        rate_bits,
        d_rate_dx,
        d_rate_dscale,
        scale_active,
        mse,
    })
}

/// Noisy training forward pass: centre, transform by `B⁻¹`, divide by the
/// effective step `step_scale·q_s`, add noise, measure relaxed rate, and map
/// back.
pub fn forward_train(
    params: &BasisParams,
    entropy: &EntropyParams,
    batch: &TrainingBatch,
    step_scale: f64,
) -> Result<ForwardOutput> {
    let step = check_inputs(params, entropy, batch, step_scale)?;
    let factors = Factors::new(params)?;
    let pass = run(&factors, entropy, batch, step)?;
    Ok(ForwardOutput {
        reconstructions: pass.reconstructions.as_slice().to_vec(),
        rate_bits: pass.rate_bits,
        mse: pass.mse,
    })
}

/// Exact gradients of `mse + λ·mean(rate_bits)` with the noise held fixed.
pub fn backward(
    params: &BasisParams,
    entropy: &EntropyParams,
    batch: &TrainingBatch,
    step_scale: f64,
    lambda: f64,
) -> Result<ParamGradients> {
    let step = check_inputs(params, entropy, batch, step_scale)?;
    let factors = Factors::new(params)?;
    let pass = run(&factors, entropy, batch, step)?;
    let (n, count) = batch.vectors.shape();
    let b = factors.basis.matrix();
    let b_inv = factors.basis.inverse();
    let rate_weight = lambda / count as f64;

    let g_recon = &pass.residual * (-2.0 / (n * count) as f64);
    let mut d_mu = g_recon.column_sum();
    let g_b = &g_recon * pass.scaled.transpose();
    let g_scaled = b.transpose() * &g_recon;
    let g_noisy = &g_scaled * step + &pass.d_rate_dx * rate_weight;
    let mut d_step = g_scaled.dot(&pass.noisy);

    let mut d_sigma = vec![0.0; n];
    for j in 0..n {
        if pass.scale_active[j] {
            let g = rate_weight * pass.d_rate_dscale[j];
            d_sigma[j] = g / step;
            d_step -= g * entropy.sigma[j] / (step * step);
        }
    }
    let g_transformed = &g_noisy / step;
    d_step -= g_noisy.dot(&pass.transformed) / (step * step);
    let g_b_inv = &g_transformed * pass.centered.transpose();
    d_mu -= (b_inv.transpose() * &g_transformed).column_sum();

    // B = U·D·Vᵀ and B⁻¹ = V·D⁻¹·Uᵀ.
    let (u, v) = (&factors.u, &factors.v);
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(&factors.scales));
    let e = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        factors.scales.iter().map(|s| 1.0 / s),
    ));
    let g_u = &g_b * v * &d + g_b_inv.transpose() * v * &e;
    let g_v = g_b.transpose() * u * &d + &g_b_inv * u * &e;
    let through_b = u.transpose() * &g_b * v;
    let through_inv = v.transpose() * &g_b_inv * u;
    let d_log_sigma: Vec<f64> = (0..n)
        .map(|j| through_b[(j, j)] * factors.scales[j] - through_inv[(j, j)] / factors.scales[j])
        .collect();

    let grads = ParamGradients {
        d_skew_u: super::cayley::cayley_backward(u, &factors.resolvent_u, &g_u),
        d_skew_v: super::cayley::cayley_backward(v, &factors.resolvent_v, &g_v),
        d_log_sigma,
        d_sigma,
        d_mu_g: d_mu.as_slice().to_vec(),
        d_q_s: step_scale * d_step,
        d_step_scale: entropy.q_s * d_step,
        loss: pass.mse + lambda * pass.rate_bits.iter().sum::<f64>() / count as f64,
        mse: pass.mse,
        mean_rate: pass.rate_bits.iter().sum::<f64>() / count as f64,
    };
    let finite = grads
        .basis_flat()
        .iter()
        .chain(&grads.d_sigma)
        .chain(&grads.d_mu_g)
        .chain([&grads.d_q_s, &grads.d_step_scale, &grads.loss])
        .all(|g| g.is_finite());
    if !finite {
        return Err(Error::NonFinite("gradient".into()));
    }
    Ok(grads)
}

/// Hard quantization in the learned basis: `round(B⁻¹(f - μ)/(step_scale·q_s))`.
pub fn quantize_coords(
    basis: &LatticeBasis,
    entropy: &EntropyParams,
    vector: &[f64],
    step_scale: f64,
) -> Result<Vec<i64>> {
    let step = step_scale * entropy.q_s;
    let centered: Vec<f64> = vector
        .iter()
        .zip(&entropy.mu_g)
        .map(|(f, m)| f - m)
        .collect();
    if centered.len() != basis.dim() || vector.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: vector.len(),
        });
    }
    basis
        .coordinates(&centered)
        .into_iter()
        .map(|t| {
            let r = round_half_even(t / step);
            if r.is_finite() && r.abs() < 2f64.powi(53) {
                Ok(r as i64)
            } else {
                Err(Error::NonFinite(format!("coordinate {t}")))
            }
        })
        .collect()
}

/// `B·(step_scale·q_s·u) + μ`.
pub fn reconstruct(
    basis: &LatticeBasis,
    entropy: &EntropyParams,
    coords: &[i64],
    step_scale: f64,
) -> Vec<f64> {
    let step = step_scale * entropy.q_s;
    let scaled = DVector::from_iterator(coords.len(), coords.iter().map(|&u| step * u as f64));
    let z = basis.matrix() * scaled;
    z.iter().zip(&entropy.mu_g).map(|(v, m)| v + m).collect()
}
