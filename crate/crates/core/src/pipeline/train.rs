use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{QuantizerKind, TrainedModel};
use super::source::VectorSource;
use crate::adaptive::{backward, skew_len, Adam, BasisParams, NoiseKind, TrainingBatch};
use crate::entropy::{EntropyParams, SIGMA_MIN};
use crate::rate_control::{sample_target, GainVector};
use crate::{Error, Result};

/// Consecutive non-finite steps tolerated before training gives up.
const MAX_BAD_STEPS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// One value trains a single-rate model; several (strictly increasing)
    /// train one gain per value.
    pub lambdas: Vec<f64>,
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![0.004],
            iterations: 4000,
            batch_size: 256,
            learning_rate: 0.01,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn single(lambda: f64) -> Self {
        Self {
            lambdas: vec![lambda],
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::BadSpec("iterations must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::BadSpec("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::BadSpec(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// A trained model plus the per-iteration loss trace.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub losses: Vec<f64>,
    pub skipped_steps: usize,
}

/// Offsets of each parameter group inside the flat optimizer vector:
/// `basis ‖ log σ ‖ μ ‖ log q_s ‖ log g`.
struct Layout {
    dim: usize,
    basis: usize,
    targets: usize,
}

impl Layout {
    fn log_sigma(&self) -> usize {
        self.basis
    }
    fn mu(&self) -> usize {
        self.basis + self.dim
    }
    fn log_q(&self) -> usize {
        self.basis + 2 * self.dim
    }
    fn log_gain(&self) -> usize {
        self.log_q() + 1
    }
    fn len(&self) -> usize {
        self.log_gain() + self.targets
    }

    fn unpack(
        &self,
        x: &[f64],
        lambdas: &[f64],
    ) -> Result<(BasisParams, EntropyParams, GainVector)> {
        let n = self.dim;
        let basis = BasisParams::from_flat(n, &x[..self.basis])?;
        let sigma = x[self.log_sigma()..self.mu()]
            .iter()
            .map(|t| t.exp())
            .collect();
        let mu = x[self.mu()..self.log_q()].to_vec();
        let entropy = EntropyParams::new(sigma, mu, x[self.log_q()].exp())?;
        let gains = GainVector::with_log_gains(x[self.log_gain()..].to_vec(), lambdas.to_vec())?;
        Ok((basis, entropy, gains))
    }
}

/// Trains a model of the given kind on `source`.
pub fn train(
    source: &VectorSource,
    config: &TrainConfig,
    kind: QuantizerKind,
) -> Result<TrainedModel> {
    train_traced(source, config, kind).map(|o| o.model)
}

/// Like [`train`], also returning the loss at every iteration.
pub fn train_traced(
    source: &VectorSource,
    config: &TrainConfig,
    kind: QuantizerKind,
) -> Result<TrainOutcome> {
    config.check()?;
    let n = source.dim();
    kind.check_dim(n)?;
    if source.is_empty() {
        return Err(Error::EmptyInput);
    }
    let lambdas = GainVector::new(config.lambdas.clone())?.lambdas().to_vec();
    let layout = Layout {
        dim: n,
        basis: 2 * skew_len(n) + n,
        targets: lambdas.len(),
    };

    // Start at B = I, the data's own scale and mean, and the step that is
    // optimal for a high-rate scalar quantizer at the (geometric) mean λ.
    let mut x = vec![0.0; layout.len()];
    for (j, s) in source.std_dev().iter().enumerate() {
        x[layout.log_sigma() + j] = s.max(SIGMA_MIN).ln();
    }
    x[layout.mu()..layout.log_q()].copy_from_slice(&source.mean());
    let mean_log_lambda = lambdas.iter().map(|l| l.ln()).sum::<f64>() / lambdas.len() as f64;
    x[layout.log_q()] = 0.5 * (6.0 * n as f64 / LN_2).ln() + 0.5 * mean_log_lambda;

    let mut trainable = vec![true; layout.len()];
    if kind != QuantizerKind::Salvq {
        trainable[..layout.basis].fill(false);
    }
    if layout.targets == 1 {
        trainable[layout.log_gain()] = false;
    }
    let noise = match kind {
        QuantizerKind::FixedE8 => NoiseKind::E8Cell,
        _ => NoiseKind::Cube,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(layout.len());
    let mut losses = Vec::with_capacity(config.iterations);
    let mut skipped = 0;
    let mut bad_run = 0;
    let decay_from = config.iterations - config.iterations / 5;
    let mut batch_data = vec![0.0; n * config.batch_size];

    for it in 0..config.iterations {
        let target = sample_target(&mut rng, layout.targets);
        for b in 0..config.batch_size {
            let i = rng.random_range(0..source.len());
            batch_data[b * n..(b + 1) * n].copy_from_slice(source.vector(i));
        }
        let batch = TrainingBatch::sample(n, &batch_data, noise, &mut rng)?;
        let step = layout
            .unpack(&x, &lambdas)
            .and_then(|(basis, entropy, gains)| {
                let gain = gains.gain(target)?;
                let g = backward(&basis, &entropy, &batch, gain, lambdas[target])?;
                Ok((g, entropy, gain))
            });
        let (grads, entropy, gain) = match step {
            Ok(v) => v,
            Err(e @ (Error::NonFinite(_) | Error::SingularBasis { .. })) => {
                skipped += 1;
                bad_run += 1;
                log::warn!("iteration {it}: skipped step ({e})");
                if bad_run >= MAX_BAD_STEPS {
                    return Err(Error::NonFinite(format!(
                        "{bad_run} consecutive non-finite steps at iteration {it}: {e}"
                    )));
                }
                losses.push(f64::NAN);
                continue;
            }
            Err(e) => return Err(e),
        };
        bad_run = 0;
        losses.push(grads.loss);

        let mut g = vec![0.0; layout.len()];
        g[..layout.basis].copy_from_slice(&grads.basis_flat());
        for j in 0..n {
            g[layout.log_sigma() + j] = entropy.sigma[j] * grads.d_sigma[j];
            g[layout.mu() + j] = grads.d_mu_g[j];
        }
        g[layout.log_q()] = entropy.q_s * grads.d_q_s;
        g[layout.log_gain() + target] = gain * grads.d_step_scale;
        for (gi, &t) in g.iter_mut().zip(&trainable) {
            if !t {
                *gi = 0.0;
            }
        }
        let lr = if it >= decay_from {
            0.1 * config.learning_rate
        } else {
            config.learning_rate
        };
        adam.step(&mut x, &g, lr)?;

        if it % 100 == 0 {
            log::info!(
                "{} iter {it}: loss {:.6} mse {:.6} bits/vector {:.4}",
                kind.name(),
                grads.loss,
                grads.mse,
                grads.mean_rate
            );
        }
    }

    let (basis, entropy, gains) = layout.unpack(&x, &lambdas)?;
    Ok(TrainOutcome {
        model: TrainedModel {
            kind,
            basis,
            entropy,
            gains,
        },
        losses,
        skipped_steps: skipped,
    })
}
