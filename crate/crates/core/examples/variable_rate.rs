//! One model, four rates: a gain vector scales the quantizer step per target.

use lvqlab::pipeline::{evaluate_all, gen_source, train, QuantizerKind, SourceSpec, TrainConfig};

fn main() -> lvqlab::Result<()> {
    let source = gen_source(&SourceSpec::Ar1 {
        dim: 8,
        rho: 0.9,
        variance: 1.0,
        count: 40_000,
        seed: 2,
    })?;
    let (train_set, test_set) = source.split();
    let config = TrainConfig {
        lambdas: vec![0.002, 0.004, 0.008, 0.015],
        iterations: 8000,
        ..TrainConfig::default()
    };
    let model = train(&train_set, &config, QuantizerKind::Salvq)?;
    let curve = evaluate_all(&model, &test_set)?;
    let mut points = curve.points.clone();
    points.sort_by_key(|p| p.target);
    println!("target  lambda   gain   bits/vec   psnr");
    for p in points {
        println!(
            "{:>6}  {:.3}  {:.3}  {:>8.3}  {:.2}",
            p.target,
            p.lambda,
            model.gains.gain(p.target)?,
            p.bits_per_vector,
            p.psnr_db
        );
    }
    Ok(())
}
