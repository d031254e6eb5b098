use super::pmf::SIGMA_MIN;
use crate::{Error, Result};

/// Per-dimension Gaussian scales, the global mean, and the base step.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyParams {
    pub sigma: Vec<f64>,
    pub mu_g: Vec<f64>,
    pub q_s: f64,
}

impl EntropyParams {
    /// Scales below [`SIGMA_MIN`] are clamped up to it.
    pub fn new(sigma: Vec<f64>, mu_g: Vec<f64>, q_s: f64) -> Result<Self> {
        if sigma.len() != mu_g.len() {
            return Err(Error::DimensionMismatch {
                expected: sigma.len(),
                got: mu_g.len(),
            });
        }
        if sigma.iter().chain(&mu_g).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("entropy parameter".into()));
        }
        if !(q_s > 0.0 && q_s.is_finite()) {
            return Err(Error::BadSpec(format!("q_s must be positive, got {q_s}")));
        }
        let sigma = sigma.into_iter().map(|s| s.max(SIGMA_MIN)).collect();
        Ok(Self { sigma, mu_g, q_s })
    }

    /// Unit scales, zero mean, unit step.
    pub fn unit(dim: usize) -> Self {
        Self {
            sigma: vec![1.0; dim],
            mu_g: vec![0.0; dim],
            q_s: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    /// Model scales in units of the effective step `step_scale·q_s`.
    pub fn sigma_steps(&self, step_scale: f64) -> Vec<f64> {
        let step = step_scale * self.q_s;
        self.sigma.iter().map(|s| s / step).collect()
    }
}
