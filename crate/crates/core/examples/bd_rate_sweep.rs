//! Sweeps λ for all three quantizers and reports BD-rate against the scalar
//! baseline. Takes a while; run with `--release`.

use lvqlab::pipeline::{bd_rate, gen_source, sweep, QuantizerKind, SourceSpec, TrainConfig};

fn main() -> lvqlab::Result<()> {
    let source = gen_source(&SourceSpec::Ar1 {
        dim: 8,
        rho: 0.9,
        variance: 1.0,
        count: 20_000,
        seed: 1,
    })?;
    let lambdas = [0.002, 0.004, 0.008, 0.015, 0.025];
    let config = TrainConfig {
        iterations: 2000,
        seed: 3,
        ..TrainConfig::default()
    };
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let usq = sweep(&source, &lambdas, QuantizerKind::Usq, &config, jobs)?;
    print!("usq curve:\n{}", usq.to_csv());
    for kind in [QuantizerKind::FixedE8, QuantizerKind::Salvq] {
        let curve = sweep(&source, &lambdas, kind, &config, jobs)?;
        println!(
            "{:<6} BD-rate vs usq: {:+.2}%",
            kind.name(),
            bd_rate(&usq, &curve)?
        );
    }
    Ok(())
}
