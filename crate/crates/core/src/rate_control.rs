//! Variable rate from one model: a learned gain `g_i` per target λ_i
//! multiplies the quantization step.

use rand::Rng;

use crate::adaptive::{ForwardOutput, ParamGradients};
use crate::{Error, Result};

/// Per-target step multipliers `g_i = exp(log_gains[i])` and their λ values.
/// Index 0 is the highest rate (smallest λ).
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector {
    pub log_gains: Vec<f64>,
    lambdas: Vec<f64>,
}

impl GainVector {
    /// Unit gains for the given λ values.
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        let log_gains = vec![0.0; lambdas.len()];
        Self::with_log_gains(log_gains, lambdas)
    }

    pub fn with_log_gains(log_gains: Vec<f64>, lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::BadSpec(
                "at least one rate target is required".into(),
            ));
        }
        if log_gains.len() != lambdas.len() {
            return Err(Error::DimensionMismatch {
                expected: lambdas.len(),
                got: log_gains.len(),
            });
        }
        if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::BadSpec("lambda values must be positive".into()));
        }
        if lambdas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadSpec(
                "lambda values must be strictly increasing".into(),
            ));
        }
        if log_gains.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("log gain".into()));
        }
        Ok(Self { log_gains, lambdas })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn gains(&self) -> Vec<f64> {
        self.log_gains.iter().map(|g| g.exp()).collect()
    }

    fn check(&self, target: usize) -> Result<()> {
        if target >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: target,
                len: self.len(),
            });
        }
        Ok(())
    }

    pub fn gain(&self, target: usize) -> Result<f64> {
        self.check(target)?;
        Ok(self.log_gains[target].exp())
    }

    pub fn lambda(&self, target: usize) -> Result<f64> {
        self.check(target)?;
        Ok(self.lambdas[target])
    }
}

/// `g_target · q_s`.
pub fn scale_step(q_s: f64, gains: &GainVector, target: usize) -> Result<f64> {
    Ok(gains.gain(target)? * q_s)
}

/// Uniform index in `0..m`.
pub fn sample_target<R: Rng>(rng: &mut R, m: usize) -> usize {
    if m <= 1 {
        0
    } else {
        rng.random_range(0..m)
    }
}

/// `mse + λ_target · mean(rate_bits)` for a forward pass run with
/// `step_scale = g_target`.
pub fn multirate_loss(output: &ForwardOutput, target: usize, gains: &GainVector) -> Result<f64> {
    Ok(output.loss(gains.lambda(target)?))
}

/// `∂L/∂log g_target`, from gradients computed with `step_scale = g_target`
/// and `λ = λ_target`.
pub fn log_gain_gradient(grads: &ParamGradients, target: usize, gains: &GainVector) -> Result<f64> {
    Ok(gains.gain(target)? * grads.d_step_scale)
}
