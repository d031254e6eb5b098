//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use lvqlab::adaptive::{backward, forward_train, BasisParams, NoiseKind, TrainingBatch};
use lvqlab::entropy::{self, pmf_discrete, EntropyParams, SymbolLayout};
use lvqlab::lattice::{
    brute_force_nearest, nearest_point_a2, nearest_point_dn, nearest_point_e8, nsm_monte_carlo,
    LatticeBasis, NamedLattice,
};
use lvqlab::pipeline::{
    bd_rate, evaluate_all, gen_source, sweep, train, QuantizerKind, RDCurve, RDPoint, SourceSpec,
    TrainConfig, TrainedModel, VectorSource,
};
use lvqlab::rate_control::GainVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut draw = |n: usize, spread: f64| -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-spread..spread)).collect()
    };
    let mut mismatches = [0usize; 3];
    let e8 = NamedLattice::e8();
    let d4 = NamedLattice::dn(4).map_err(e)?;
    let a2 = NamedLattice::a2();
    for _ in 0..10_000 {
        let y = draw(8, 4.0);
        let fast = nearest_point_e8(&y).map_err(e)?;
        let slow = brute_force_nearest(e8.basis(), &y, 2).map_err(e)?;
        mismatches[0] += (fast.embedding != slow.embedding) as usize;

        let y = draw(4, 6.0);
        let fast = nearest_point_dn(&y).map_err(e)?;
        let slow = brute_force_nearest(d4.basis(), &y, 2).map_err(e)?;
        mismatches[1] += (fast.embedding != slow.embedding) as usize;

        let y = draw(2, 6.0);
        let fast = nearest_point_a2(&y).map_err(e)?;
        let slow = brute_force_nearest(a2.basis(), &y, 2).map_err(e)?;
        mismatches[2] += (fast.coords != slow.coords) as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("mismatches e8/d4/a2 = {mismatches:?} on 10^4 points each, {secs:.1} s");
    ensure(mismatches == [0; 3] && secs < 30.0, || detail.clone())?;
    Ok(detail)
}

fn nsm_reproduction() -> Outcome {
    let z = nsm_monte_carlo(&NamedLattice::zn(2).map_err(e)?, 1_000_000, 1).map_err(e)?;
    let a2 = nsm_monte_carlo(&NamedLattice::a2(), 1_000_000, 2).map_err(e)?;
    let e8 = nsm_monte_carlo(&NamedLattice::e8(), 1_000_000, 3).map_err(e)?;
    let hex = 5.0 / (36.0 * 3f64.sqrt());
    let gap = |a: &lvqlab::lattice::NsmEstimate, b: &lvqlab::lattice::NsmEstimate| {
        (a.nsm - b.nsm) / (a.std_err.powi(2) + b.std_err.powi(2)).sqrt()
    };
    let detail = format!(
        "G(Z2)={:.5}±{:.5} G(A2)={:.5}±{:.5} G(E8)={:.5}±{:.5}; gaps {:.1}σ, {:.1}σ",
        z.nsm,
        z.std_err,
        a2.nsm,
        a2.std_err,
        e8.nsm,
        e8.std_err,
        gap(&z, &a2),
        gap(&a2, &e8)
    );
    ensure(
        (z.nsm - 1.0 / 12.0).abs() <= 0.001
            && (a2.nsm - hex).abs() <= 0.001
            && (e8.nsm - 0.0717).abs() <= 0.001
            && gap(&z, &a2) > 5.0
            && gap(&a2, &e8) > 5.0,
        || detail.clone(),
    )?;
    Ok(detail)
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for cfg in 0..100u64 {
        let n = [2, 4, 8][cfg as usize % 3];
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + cfg);
        let params = BasisParams::random(n, 0.6, &mut rng);
        let sigma: Vec<f64> = (0..n).map(|_| rng.random_range(0.7..3.0)).collect();
        let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let q_s = rng.random_range(0.5..1.5);
        let step_scale = rng.random_range(0.7..1.4);
        let lambda = rng.random_range(0.0..0.2);
        let normal = Normal::new(0.0, 1.5).unwrap();
        let vectors: Vec<f64> = (0..n * 16).map(|_| normal.sample(&mut rng)).collect();
        let batch = TrainingBatch::sample(n, &vectors, NoiseKind::Cube, &mut rng).map_err(e)?;

        let k = params.len();
        let mut x = params.to_flat();
        x.extend(&sigma);
        x.extend(&mu);
        x.push(q_s);
        x.push(step_scale);
        let loss = |x: &[f64]| -> Result<f64, String> {
            let p = BasisParams::from_flat(n, &x[..k]).map_err(e)?;
            let ent = EntropyParams {
                sigma: x[k..k + n].to_vec(),
                mu_g: x[k + n..k + 2 * n].to_vec(),
                q_s: x[k + 2 * n],
            };
            Ok(forward_train(&p, &ent, &batch, x[k + 2 * n + 1])
                .map_err(e)?
                .loss(lambda))
        };
        let ent = EntropyParams::new(sigma.clone(), mu.clone(), q_s).map_err(e)?;
        let g = backward(&params, &ent, &batch, step_scale, lambda).map_err(e)?;
        let mut analytic = g.basis_flat();
        analytic.extend(&g.d_sigma);
        analytic.extend(&g.d_mu_g);
        analytic.push(g.d_q_s);
        analytic.push(g.d_step_scale);

        let h = 1e-5;
        for i in 0..x.len() {
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[i] += h;
            lo[i] -= h;
            let fd = (loss(&hi)? - loss(&lo)?) / (2.0 * h);
            let err = (fd - analytic[i]).abs();
            let rel = err / fd.abs().max(analytic[i].abs()).max(1e-300);
            worst = worst.max(rel.min(err / 1e-7));
            if err > 1e-7 && rel > 1e-4 {
                return Err(format!(
                    "config {cfg} (n={n}) coordinate {i}: fd {fd} vs analytic {}",
                    analytic[i]
                ));
            }
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "{checked} partials over 100 configs, worst relative error {worst:.2e}, {secs:.1} s"
    );
    ensure(secs < 60.0, || detail.clone())?;
    Ok(detail)
}

fn codec() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..1000 {
        let n = rng.random_range(1..6);
        let sigma: Vec<f64> = (0..n)
            .map(|_| 10f64.powf(rng.random_range(-6.0..2.0)))
            .collect();
        let step = rng.random_range(0.1..3.0);
        let params = EntropyParams::new(sigma, vec![0.0; n], 1.0).map_err(e)?;
        let count = rng.random_range(0..40);
        let symbols: Vec<i64> = (0..n * count)
            .map(|_| {
                if rng.random_bool(0.05) {
                    rng.random_range(-1_000_000..1_000_000)
                } else {
                    rng.random_range(-20..20)
                }
            })
            .collect();
        let stream = entropy::encode(
            &symbols,
            &params,
            &LatticeBasis::identity(n),
            step,
            SymbolLayout::Independent,
        )
        .map_err(e)?;
        let parsed = entropy::Bitstream::from_bytes(&stream.to_bytes()).map_err(e)?;
        let back =
            entropy::decode(&parsed, &params, step, count, SymbolLayout::Independent).map_err(e)?;
        ensure(back == symbols, || {
            format!("fuzz trial {trial} did not round-trip")
        })?;
    }

    // Symbols drawn from the model itself: round(N(0, σ̃)) is exactly the
    // integrated-Gaussian distribution on unit bins.
    let scales = [0.5, 1.0, 3.0, 8.0];
    let params = EntropyParams::new(scales.to_vec(), vec![0.0; 4], 1.0).map_err(e)?;
    let mut symbols = Vec::with_capacity(100_000);
    for i in 0..100_000 {
        let x: f64 = Normal::new(0.0, scales[i % 4]).unwrap().sample(&mut rng);
        symbols.push(x.round_ties_even() as i64);
    }
    let cross_entropy: f64 = symbols
        .iter()
        .enumerate()
        .map(|(i, &k)| -pmf_discrete(k, 0.0, scales[i % 4], 1.0).log2())
        .sum();
    let stream = entropy::encode(
        &symbols,
        &params,
        &LatticeBasis::identity(4),
        1.0,
        SymbolLayout::Independent,
    )
    .map_err(e)?;
    let bits = stream.payload_bits() as f64;
    let back =
        entropy::decode(&stream, &params, 1.0, 25_000, SymbolLayout::Independent).map_err(e)?;
    let detail = format!(
        "10^3 fuzz round trips exact; 10^5 symbols: {bits} bits vs cross-entropy {cross_entropy:.1} ({:+.3}%)",
        100.0 * (bits / cross_entropy - 1.0)
    );
    ensure(
        back == symbols && (bits - cross_entropy).abs() <= 0.005 * cross_entropy + 64.0,
        || detail.clone(),
    )?;
    Ok(detail)
}

fn point(bits: f64, psnr: f64) -> RDPoint {
    RDPoint {
        lambda: 0.0,
        target: 0,
        bits_per_vector: bits,
        mse: 1.0,
        psnr_db: psnr,
    }
}

fn bd_rate_correctness() -> Outcome {
    let anchor = RDCurve::new(vec![
        point(10.0, 28.0),
        point(14.0, 30.5),
        point(19.0, 33.1),
        point(26.0, 35.4),
        point(35.0, 37.9),
    ]);
    let same = bd_rate(&anchor, &anchor).map_err(e)?;
    let mut scaled = anchor.clone();
    for p in &mut scaled.points {
        p.bits_per_vector *= 0.9;
    }
    let tenth = bd_rate(&anchor, &scaled).map_err(e)?;

    // Curves lying exactly on known cubics; the fit recovers them, so the
    // answer must match integrating the cubics numerically.
    let ca =
        |p: f64| 0.8 + 0.05 * (p - 30.0) + 0.002 * (p - 30.0).powi(2) + 1e-4 * (p - 30.0).powi(3);
    let ct =
        |p: f64| 0.75 + 0.045 * (p - 31.0) + 0.003 * (p - 31.0).powi(2) - 2e-4 * (p - 31.0).powi(3);
    let a = RDCurve::new(
        [25.0, 28.0, 31.0, 34.0, 37.0]
            .iter()
            .map(|&p| point(10f64.powf(ca(p)), p))
            .collect(),
    );
    let t = RDCurve::new(
        [26.0, 29.5, 32.0, 35.0, 38.5]
            .iter()
            .map(|&p| point(10f64.powf(ct(p)), p))
            .collect(),
    );
    let got = bd_rate(&a, &t).map_err(e)?;
    let (lo, hi) = (26.0, 37.0);
    let steps = 20_000;
    let h = (hi - lo) / steps as f64;
    let simpson: f64 = (0..=steps)
        .map(|i| {
            let p = lo + i as f64 * h;
            let w = if i == 0 || i == steps {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * (ct(p) - ca(p))
        })
        .sum::<f64>()
        * h
        / 3.0;
    let want = 100.0 * (10f64.powf(simpson / (hi - lo)) - 1.0);
    let detail = format!(
        "identical {same:.2e}%, 0.9x rate {tenth:.6}%, cubic case {got:.9}% vs numeric {want:.9}%"
    );
    ensure(
        same.abs() < 1e-9 && (tenth + 10.0).abs() <= 0.01 && (got - want).abs() <= 1e-6,
        || detail.clone(),
    )?;
    Ok(detail)
}

fn ar1_source() -> Result<VectorSource, String> {
    gen_source(&SourceSpec::Ar1 {
        dim: 8,
        rho: 0.9,
        variance: 1.0,
        count: 100_000,
        seed: 1,
    })
    .map_err(e)
}

const ITERS: usize = 4000;

fn config() -> TrainConfig {
    TrainConfig {
        lambdas: vec![],
        iterations: ITERS,
        batch_size: 256,
        learning_rate: 0.01,
        seed: 3,
    }
}

fn headline() -> Outcome {
    let start = Instant::now();
    let src = ar1_source()?;
    let lambdas = [0.002, 0.004, 0.008, 0.015, 0.025];
    let curve = |kind| sweep(&src, &lambdas, kind, &config(), 1).map_err(e);
    let usq = curve(QuantizerKind::Usq)?;
    let e8 = curve(QuantizerKind::FixedE8)?;
    let salvq = curve(QuantizerKind::Salvq)?;
    let bd_e8 = bd_rate(&usq, &e8).map_err(e)?;
    let bd_salvq = bd_rate(&usq, &salvq).map_err(e)?;
    let detail = format!(
        "BD-rate vs USQ: SALVQ {bd_salvq:.2}%, E8 {bd_e8:.2}% ({ITERS} iterations/model, {:.0} s)",
        start.elapsed().as_secs_f64()
    );
    ensure(bd_salvq < bd_e8 && bd_e8 < 0.0, || detail.clone())?;
    Ok(detail)
}

fn variable_rate() -> Outcome {
    let src = ar1_source()?;
    let lambdas = [0.002, 0.004, 0.006, 0.008];
    let single = sweep(&src, &lambdas, QuantizerKind::Salvq, &config(), 1).map_err(e)?;
    let (train_split, _) = src.split();
    let cfg = TrainConfig {
        lambdas: lambdas.to_vec(),
        iterations: 4 * ITERS,
        ..config()
    };
    let model = train(&train_split, &cfg, QuantizerKind::Salvq).map_err(e)?;
    let multi = evaluate_all(&model, &train_split).map_err(e)?;
    let mut by_target = multi.points.clone();
    by_target.sort_by_key(|p| p.target);
    let monotone = by_target
        .windows(2)
        .all(|w| w[1].bits_per_vector < w[0].bits_per_vector && w[1].mse > w[0].mse);
    let gains = model.gains.gains();
    let bd = bd_rate(&single, &multi).map_err(e)?;
    let detail = format!(
        "multirate vs single-rate BD-rate {bd:+.2}%, gains {:?}, monotone {monotone}",
        gains.iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>()
    );
    ensure(monotone && bd <= 10.0 && gains[0] < gains[3], || {
        detail.clone()
    })?;
    Ok(detail)
}

fn usq_degeneracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let entropy = EntropyParams::new(
        (0..8).map(|_| rng.random_range(0.5..2.0)).collect(),
        (0..8).map(|_| rng.random_range(-0.5..0.5)).collect(),
        0.37,
    )
    .map_err(e)?;
    let model = |kind| TrainedModel {
        kind,
        basis: BasisParams::identity(8),
        entropy: entropy.clone(),
        gains: GainVector::with_log_gains(vec![0.0, 0.3], vec![0.002, 0.008]).unwrap(),
    };
    let (salvq, usq) = (model(QuantizerKind::Salvq), model(QuantizerKind::Usq));
    let normal = Normal::new(0.0, 2.0).unwrap();
    let inputs: Vec<f64> = (0..8 * 1000).map(|_| normal.sample(&mut rng)).collect();
    for target in 0..2 {
        let (sa, ra) = salvq.compress(&inputs, target).map_err(e)?;
        let (sb, rb) = usq.compress(&inputs, target).map_err(e)?;
        let same_recon = ra.iter().zip(&rb).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(same_recon && sa.to_bytes() == sb.to_bytes(), || {
            format!("target {target}: outputs differ")
        })?;
    }
    Ok("10^3 inputs at 2 targets: reconstructions and bitstreams bit-identical".into())
}

fn cli_determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_lvqlab");
    let script: &[&[&str]] = &[
        &[
            "gen",
            "--source",
            "ar1:n=8,rho=0.9,var=1,count=400,seed=4",
            "--out",
            "v.lvqv",
        ],
        &[
            "train",
            "--source",
            "ar1:n=8,rho=0.9,var=1,count=800",
            "--quantizer",
            "salvq",
            "--lambda",
            "0.004",
            "--iters",
            "200",
            "--out",
            "salvq.slvm",
        ],
        &[
            "train",
            "--source",
            "ar1:n=8,rho=0.9,var=1,count=800",
            "--quantizer",
            "e8",
            "--lambda",
            "0.004",
            "--iters",
            "200",
            "--out",
            "e8.slvm",
        ],
        &[
            "train",
            "--source",
            "ar1:n=8,rho=0.9,var=1,count=800",
            "--quantizer",
            "salvq",
            "--lambdas",
            "0.002,0.004,0.006,0.008",
            "--iters",
            "200",
            "--out",
            "vbr.slvm",
        ],
        &[
            "compress",
            "--model",
            "salvq.slvm",
            "--input",
            "v.lvqv",
            "--out",
            "salvq.slvq",
        ],
        &[
            "compress", "--model", "e8.slvm", "--input", "v.lvqv", "--out", "e8.slvq",
        ],
        &[
            "compress", "--model", "vbr.slvm", "--input", "v.lvqv", "--target", "2", "--out",
            "vbr.slvq",
        ],
        &[
            "decompress",
            "--model",
            "salvq.slvm",
            "--input",
            "salvq.slvq",
            "--out",
            "salvq.lvqv",
        ],
        &[
            "decompress",
            "--model",
            "e8.slvm",
            "--input",
            "e8.slvq",
            "--out",
            "e8.lvqv",
        ],
        &[
            "decompress",
            "--model",
            "vbr.slvm",
            "--input",
            "vbr.slvq",
            "--out",
            "vbr.lvqv",
        ],
        &["eval", "--model", "vbr.slvm", "--source", "file:v.lvqv"],
        &[
            "sweep",
            "--source",
            "ar1:n=8,rho=0.9,var=1,count=800",
            "--quantizer",
            "usq",
            "--iters",
            "150",
        ],
        &["nsm", "e8", "8", "50000"],
    ];
    let execute = |dir: &Path| -> Result<Vec<Vec<u8>>, String> {
        let mut outputs = Vec::new();
        for args in script {
            let out = Command::new(exe)
                .args(*args)
                .current_dir(dir)
                .env_remove("LVQLAB_SEED")
                .output()
                .map_err(e)?;
            ensure(out.status.success(), || {
                format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
            })?;
            outputs.push(out.stdout);
        }
        let mut names: Vec<_> = fs::read_dir(dir)
            .map_err(e)?
            .map(|d| d.map(|d| d.path()).map_err(e))
            .collect::<Result<_, _>>()?;
        names.sort();
        for p in names {
            outputs.push(fs::read(p).map_err(e)?);
        }
        Ok(outputs)
    };
    let a = tempfile::tempdir().map_err(e)?;
    let b = tempfile::tempdir().map_err(e)?;
    let first = execute(a.path())?;
    let second = execute(b.path())?;
    ensure(first == second, || {
        "outputs differ between executions".into()
    })?;
    Ok(format!(
        "{} commands, {} stdout/file artifacts byte-identical across two executions",
        script.len(),
        first.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 NSM reproduction", nsm_reproduction),
        ("3 gradient suite", gradient_suite),
        ("4 codec", codec),
        ("5 BD-rate correctness", bd_rate_correctness),
        ("6 R-D ordering SALVQ < E8 < USQ", headline),
        ("7 variable rate", variable_rate),
        ("8 USQ degeneracy", usq_degeneracy),
        ("9 CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
