//! Trains a learned-basis quantizer on a correlated Gaussian source and
//! compares it with the scalar baseline at the same λ.
//!
//!     RUST_LOG=info cargo run --release --example train_salvq

use lvqlab::pipeline::{evaluate, gen_source, train, QuantizerKind, SourceSpec, TrainConfig};

fn main() -> lvqlab::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let source = gen_source(&SourceSpec::Ar1 {
        dim: 8,
        rho: 0.9,
        variance: 1.0,
        count: 50_000,
        seed: 1,
    })?;
    let (train_set, test_set) = source.split();
    let config = TrainConfig {
        iterations: 3000,
        ..TrainConfig::single(0.004)
    };
    for kind in [QuantizerKind::Usq, QuantizerKind::Salvq] {
        let model = train(&train_set, &config, kind)?;
        let p = evaluate(&model, &test_set, 0)?;
        println!(
            "{:<6} {:>7.3} bits/vector  mse {:.5}  psnr {:.2} dB",
            kind.name(),
            p.bits_per_vector,
            p.mse,
            p.psnr_db
        );
        if kind == QuantizerKind::Salvq {
            let b = model.lattice_basis()?;
            println!(
                "learned basis (columns), det {:.4}:\n{:.3}",
                b.det(),
                b.matrix()
            );
        }
    }
    Ok(())
}
