//! End-to-end training and evaluation behaviour.

use lvqlab::adaptive::{backward, Adam, BasisParams, NoiseKind, TrainingBatch};
use lvqlab::entropy::EntropyParams;
use lvqlab::pipeline::{
    evaluate, gen_source, sweep, train, train_traced, QuantizerKind, SourceSpec, TrainConfig,
    TrainedModel, VectorSource,
};
use lvqlab::rate_control::GainVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ar1(rho: f64, count: usize, seed: u64) -> VectorSource {
    gen_source(&SourceSpec::Ar1 {
        dim: 8,
        rho,
        variance: 1.0,
        count,
        seed,
    })
    .unwrap()
}

fn quick(lambda: f64, iterations: usize) -> TrainConfig {
    TrainConfig {
        lambdas: vec![lambda],
        iterations,
        batch_size: 128,
        learning_rate: 0.01,
        seed: 4,
    }
}

#[test]
fn optimizer_reduces_loss_on_fixed_batch() {
    let src = ar1(0.9, 256, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let batch = TrainingBatch::sample(8, src.data(), NoiseKind::Cube, &mut rng).unwrap();
    let n = 8;
    let k = BasisParams::identity(n).len();
    let mut x = vec![0.0; k + 2 * n + 1];
    x[k + 2 * n] = 0.3f64.ln();
    let mut adam = Adam::new(x.len());
    let mut losses = Vec::new();
    for _ in 0..500 {
        let basis = BasisParams::from_flat(n, &x[..k]).unwrap();
        let sigma: Vec<f64> = x[k..k + n].iter().map(|t| t.exp()).collect();
        let e =
            EntropyParams::new(sigma, x[k + n..k + 2 * n].to_vec(), x[k + 2 * n].exp()).unwrap();
        let g = backward(&basis, &e, &batch, 1.0, 0.004).unwrap();
        losses.push(g.loss);
        let mut grad = g.basis_flat();
        grad.extend(e.sigma.iter().zip(&g.d_sigma).map(|(s, d)| s * d));
        grad.extend(&g.d_mu_g);
        grad.push(e.q_s * g.d_q_s);
        adam.step(&mut x, &grad, 0.01).unwrap();
    }
    let smoothed = losses[450..].iter().sum::<f64>() / 50.0;
    assert!(smoothed < losses[0], "{} -> {smoothed}", losses[0]);
}

#[test]
fn usq_basis_stays_identity() {
    let src = ar1(0.9, 2000, 3);
    let m = train(&src, &quick(0.004, 300), QuantizerKind::Usq).unwrap();
    assert_eq!(m.basis, BasisParams::identity(8));
    assert_eq!(m.gains.log_gains, vec![0.0]);
    let m = train(&src, &quick(0.004, 300), QuantizerKind::FixedE8).unwrap();
    assert_eq!(m.basis, BasisParams::identity(8));
}

#[test]
fn training_is_deterministic() {
    let src = ar1(0.9, 2000, 5);
    let a = train(&src, &quick(0.004, 200), QuantizerKind::Salvq).unwrap();
    let b = train(&src, &quick(0.004, 200), QuantizerKind::Salvq).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
}

#[test]
fn single_target_multirate_equals_single_rate() {
    let src = ar1(0.5, 2000, 6);
    let single = train(&src, &TrainConfig::single(0.004), QuantizerKind::Salvq);
    let multi = train(
        &src,
        &TrainConfig {
            lambdas: vec![0.004],
            ..TrainConfig::default()
        },
        QuantizerKind::Salvq,
    );
    assert_eq!(single.unwrap().to_bytes(), multi.unwrap().to_bytes());
}

#[test]
fn iid_training_loss_goes_down() {
    let src = ar1(0.0, 4000, 7);
    let out = train_traced(&src, &quick(0.004, 600), QuantizerKind::Salvq).unwrap();
    let head = out.losses[..50].iter().sum::<f64>() / 50.0;
    let tail = out.losses[550..].iter().sum::<f64>() / 50.0;
    assert!(tail <= head, "{head} -> {tail}");
    assert_eq!(out.skipped_steps, 0);
}

#[test]
fn measured_rate_is_close_to_model_cross_entropy() {
    let src = ar1(0.9, 5000, 8);
    let m = train(&src, &quick(0.004, 400), QuantizerKind::Salvq).unwrap();
    let p = evaluate(&m, &src, 0).unwrap();
    let ideal = m.model_bits(src.data(), 0).unwrap() / src.len() as f64;
    assert!(p.bits_per_vector >= 0.0);
    assert!(
        p.bits_per_vector <= ideal * 1.005 + 64.0 / src.len() as f64,
        "{} vs {ideal}",
        p.bits_per_vector
    );
}

fn fixed_model(kind: QuantizerKind, q_s: f64) -> TrainedModel {
    TrainedModel {
        kind,
        basis: BasisParams::identity(8),
        entropy: EntropyParams::new(vec![1.0; 8], vec![0.0; 8], q_s).unwrap(),
        gains: GainVector::new(vec![0.004]).unwrap(),
    }
}

#[test]
fn usq_rate_matches_discretized_gaussian_entropy() {
    // Entropy of N(0,1) integrated over unit bins, by direct summation.
    let entropy: f64 = (-40i64..=40)
        .map(|k| lvqlab::entropy::pmf_discrete(k, 0.0, 1.0, 1.0))
        .filter(|p| *p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    assert!((entropy - 2.10).abs() < 0.01);
    let src = ar1(0.0, 20_000, 9);
    let p = evaluate(&fixed_model(QuantizerKind::Usq, 1.0), &src, 0).unwrap();
    let per_dim = p.bits_per_vector / 8.0;
    assert!(
        (per_dim / entropy - 1.0).abs() < 0.02,
        "{per_dim} vs {entropy}"
    );
}

#[test]
fn finer_steps_lower_distortion_and_raise_rate() {
    let src = ar1(0.5, 3000, 10);
    for kind in [QuantizerKind::Usq, QuantizerKind::FixedE8] {
        let pts: Vec<_> = [1.0, 0.3, 0.05]
            .iter()
            .map(|&q| evaluate(&fixed_model(kind, q), &src, 0).unwrap())
            .collect();
        for w in pts.windows(2) {
            assert!(w[1].mse < w[0].mse && w[1].bits_per_vector > w[0].bits_per_vector);
        }
        assert!(pts[2].mse < 0.001);
    }
}

#[test]
fn e8_beats_scalar_quantization_at_equal_step_volume() {
    // Same cell volume, same model: the E8 cell has lower second moment.
    let src = ar1(0.0, 5000, 11);
    let usq = evaluate(&fixed_model(QuantizerKind::Usq, 0.5), &src, 0).unwrap();
    let e8 = evaluate(&fixed_model(QuantizerKind::FixedE8, 0.5), &src, 0).unwrap();
    assert!(e8.mse < 0.9 * usq.mse, "{} vs {}", e8.mse, usq.mse);
    assert!((e8.bits_per_vector - usq.bits_per_vector).abs() < 0.5);
}

#[test]
fn sweep_rates_decrease_with_lambda() {
    let src = ar1(0.9, 3000, 12);
    let lambdas = [0.002, 0.008, 0.025];
    let cfg = quick(0.0, 300);
    let curve = sweep(&src, &lambdas, QuantizerKind::Usq, &cfg, 2).unwrap();
    assert_eq!(curve.len(), 3);
    let by_lambda = |l: f64| {
        curve
            .points
            .iter()
            .find(|p| p.lambda == l)
            .unwrap()
            .bits_per_vector
    };
    assert!(by_lambda(0.002) > by_lambda(0.008) && by_lambda(0.008) > by_lambda(0.025));
    // job count does not change results
    assert_eq!(
        sweep(&src, &lambdas, QuantizerKind::Usq, &cfg, 1).unwrap(),
        curve
    );
    assert!(sweep(&src, &[0.01, 0.01], QuantizerKind::Usq, &cfg, 1).is_err());
    let single = sweep(&src, &[0.01], QuantizerKind::Usq, &cfg, 1).unwrap();
    assert!(lvqlab::pipeline::bd_rate(&single, &single).is_err());
}
