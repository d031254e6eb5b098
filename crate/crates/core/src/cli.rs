//! The `lvqlab` command line.
//!
//! Every flag may also come from a `key=value` file given with `--config`;
//! precedence is flag, then file, then `LVQLAB_SEED` (seed only), then the
//! built-in default. The resolved settings are echoed to stderr; stdout only
//! ever carries CSV.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::entropy::Bitstream;
use crate::lattice::{nsm_monte_carlo, LatticeKind, NamedLattice};
use crate::pipeline::{
    bd_rate, evaluate, evaluate_all, gen_source, read_vectors, sweep, train, write_vectors,
    QuantizerKind, RDCurve, SourceSpec, TrainConfig, TrainedModel, VectorSource,
};
use crate::{Error, Result};

const DEFAULT_SOURCE: &str = "ar1:n=8,rho=0.9,var=1,count=100000";
const DEFAULT_SWEEP: &str = "0.002,0.004,0.008,0.015,0.025";

#[derive(Parser, Debug)]
#[command(
    name = "lvqlab",
    version,
    about = "Lattice vector quantization experiments"
)]
pub struct Cli {
    /// key=value file supplying values for flags not given on the command line
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and write it to a model file
    Train(TrainArgs),
    /// Quantize and entropy-code a vector file
    Compress(CompressArgs),
    /// Decode a bitstream back to a vector file
    Decompress(DecompressArgs),
    /// Rate and distortion of a model on a source (CSV)
    Eval(EvalArgs),
    /// Train and evaluate one model per lambda (CSV)
    Sweep(SweepArgs),
    /// BD-rate of TEST against ANCHOR curve CSVs
    Bdrate(BdrateArgs),
    /// Monte Carlo normalized second moment of a lattice (CSV)
    Nsm(NsmArgs),
    /// Write a source to a vector file
    Gen(GenArgs),
}

#[derive(Args, Debug)]
struct TrainFlags {
    /// ar1:n=8,rho=0.9,var=1,count=100000[,seed=S] or file:PATH
    #[arg(long)]
    source: Option<String>,
    /// usq, e8 or salvq
    #[arg(long)]
    quantizer: Option<String>,
    #[arg(long, conflicts_with = "lambdas")]
    lambda: Option<f64>,
    /// Comma-separated, strictly increasing
    #[arg(long)]
    lambdas: Option<String>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    flags: TrainFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompressArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// LVQV vector file
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    target: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecompressArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// SLVQ bitstream
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    source: Option<String>,
    /// Evaluate one target only (default: all)
    #[arg(long)]
    target: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    flags: TrainFlags,
    /// Models trained concurrently
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct BdrateArgs {
    anchor: PathBuf,
    test: PathBuf,
}

#[derive(Args, Debug)]
struct NsmArgs {
    /// zn, dn, e8 or a2
    lattice: String,
    dim: usize,
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Flag values merged with the config file and environment, with a record
/// of every resolved setting for the stderr header.
struct Resolver {
    file: BTreeMap<String, String>,
    env_seed: Option<String>,
    shown: Vec<(String, String)>,
}

impl Resolver {
    fn new(config: Option<&Path>, env_seed: Option<String>) -> Result<Self> {
        let mut file = BTreeMap::new();
        if let Some(path) = config {
            let text = fs::read_to_string(path)?;
            for (i, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::Format(format!("{}:{}: expected key=value", path.display(), i + 1))
                })?;
                file.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Self {
            file,
            env_seed,
            shown: Vec::new(),
        })
    }

    fn lookup<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display + Clone,
    {
        let parse = |raw: &str, from: &str| {
            raw.parse::<T>()
                .map_err(|_| Error::BadSpec(format!("bad value '{raw}' for {key} (from {from})")))
        };
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(parse(raw, "config file")?),
                None if key == "seed" => match &self.env_seed {
                    Some(raw) => Some(parse(raw, "LVQLAB_SEED")?),
                    None => None,
                },
                None => None,
            },
        };
        if let Some(v) = &value {
            self.shown.push((key.to_string(), v.to_string()));
        }
        Ok(value)
    }

    fn or<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display + Clone,
    {
        match self.lookup(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.shown.push((key.to_string(), default.to_string()));
                Ok(default)
            }
        }
    }

    fn required<T>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T: FromStr + Display + Clone,
    {
        self.lookup(key, flag)?
            .ok_or_else(|| Error::BadSpec(format!("--{key} is required")))
    }

    fn path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf> {
        let flag = flag.map(|p| p.to_string_lossy().into_owned());
        self.required::<String>(key, flag).map(PathBuf::from)
    }

    fn print(&self, command: &str, err: &mut dyn Write) {
        let _ = writeln!(err, "# lvqlab {command}");
        for (k, v) in &self.shown {
            let _ = writeln!(err, "#   {k} = {v}");
        }
    }
}

fn parse_lambdas(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::BadSpec(format!("bad lambda '{s}'")))
        })
        .collect()
}

struct TrainSetup {
    source: VectorSource,
    kind: QuantizerKind,
    config: TrainConfig,
}

fn resolve_train(r: &mut Resolver, f: TrainFlags, sweep_mode: bool) -> Result<TrainSetup> {
    let seed = r.or("seed", f.seed, 0u64)?;
    let source = r.or("source", f.source, DEFAULT_SOURCE.to_string())?;
    let kind = QuantizerKind::parse(&r.or("quantizer", f.quantizer, "salvq".to_string())?)?;
    let lambdas = if sweep_mode {
        parse_lambdas(&r.or("lambdas", f.lambdas, DEFAULT_SWEEP.to_string())?)?
    } else {
        match r.lookup("lambdas", f.lambdas)? {
            Some(list) => parse_lambdas(&list)?,
            None => vec![r.or("lambda", f.lambda, 0.004)?],
        }
    };
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        lambdas,
        iterations: r.or("iters", f.iters, defaults.iterations)?,
        batch_size: r.or("batch", f.batch, defaults.batch_size)?,
        learning_rate: r.or("lr", f.lr, defaults.learning_rate)?,
        seed,
    };
    let spec = SourceSpec::parse(&source, seed)?;
    let source = gen_source(&spec)?;
    kind.check_dim(source.dim())?;
    Ok(TrainSetup {
        source,
        kind,
        config,
    })
}

fn load_source(
    r: &mut Resolver,
    flag: Option<String>,
    seed_flag: Option<u64>,
) -> Result<VectorSource> {
    let seed = r.or("seed", seed_flag, 0u64)?;
    let text = r.or("source", flag, DEFAULT_SOURCE.to_string())?;
    gen_source(&SourceSpec::parse(&text, seed)?)
}

fn execute(
    cli: Cli,
    env_seed: Option<String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let mut r = Resolver::new(cli.config.as_deref(), env_seed)?;
    match cli.command {
        Command::Train(a) => {
            let path = r.path("out", a.out)?;
            let s = resolve_train(&mut r, a.flags, false)?;
            r.print("train", err);
            let (train_split, _) = s.source.split();
            let model = train(&train_split, &s.config, s.kind)?;
            model.save(&path)?;
            let _ = writeln!(
                err,
                "wrote {} model (gains {:?}, q_s {}) to {}",
                s.kind.name(),
                model.gains.gains(),
                model.entropy.q_s,
                path.display()
            );
        }
        Command::Compress(a) => {
            let model_path = r.path("model", a.model)?;
            let input = r.path("input", a.input)?;
            let target = r.or("target", a.target, 0usize)?;
            let path = r.path("out", a.out)?;
            r.print("compress", err);
            let model = TrainedModel::load(&model_path)?;
            let vectors = read_vectors(&input)?;
            if vectors.dim() != model.dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.dim(),
                    got: vectors.dim(),
                });
            }
            let (stream, _) = model.compress(vectors.data(), target)?;
            let bytes = stream.to_bytes();
            fs::write(&path, &bytes)?;
            let _ = writeln!(
                err,
                "{} vectors -> {} bytes ({} payload bits) at {}",
                vectors.len(),
                bytes.len(),
                stream.payload_bits(),
                path.display()
            );
        }
        Command::Decompress(a) => {
            let model_path = r.path("model", a.model)?;
            let input = r.path("input", a.input)?;
            let path = r.path("out", a.out)?;
            r.print("decompress", err);
            let model = TrainedModel::load(&model_path)?;
            let stream = Bitstream::from_bytes(&fs::read(&input)?)?;
            let recon = model.decompress(&stream)?;
            write_vectors(&path, &VectorSource::new(model.dim(), recon)?)?;
            let _ = writeln!(err, "{} vectors -> {}", stream.header.count, path.display());
        }
        Command::Eval(a) => {
            let model_path = r.path("model", a.model)?;
            let target = r.lookup("target", a.target)?;
            let source = load_source(&mut r, a.source, a.seed)?;
            r.print("eval", err);
            let model = TrainedModel::load(&model_path)?;
            let curve = match target {
                Some(t) => RDCurve::new(vec![evaluate(&model, &source, t)?]),
                None => evaluate_all(&model, &source)?,
            };
            write!(out, "{}", curve.to_csv())?;
        }
        Command::Sweep(a) => {
            let jobs = r.or("jobs", a.jobs, 1usize)?;
            let s = resolve_train(&mut r, a.flags, true)?;
            r.print("sweep", err);
            let curve = sweep(&s.source, &s.config.lambdas, s.kind, &s.config, jobs)?;
            write!(out, "{}", curve.to_csv())?;
        }
        Command::Bdrate(a) => {
            r.shown
                .push(("anchor".into(), a.anchor.display().to_string()));
            r.shown.push(("test".into(), a.test.display().to_string()));
            r.print("bdrate", err);
            let anchor = RDCurve::from_csv(&fs::read_to_string(&a.anchor)?)?;
            let test = RDCurve::from_csv(&fs::read_to_string(&a.test)?)?;
            let pct = bd_rate(&anchor, &test)?;
            writeln!(out, "bd_rate_percent\n{pct:.4}")?;
            let _ = writeln!(err, "BD-rate: {pct:.2}%");
        }
        Command::Nsm(a) => {
            let seed = r.or("seed", a.seed, 0u64)?;
            r.shown.push(("lattice".into(), a.lattice.clone()));
            r.shown.push(("dim".into(), a.dim.to_string()));
            r.shown.push(("samples".into(), a.samples.to_string()));
            r.print("nsm", err);
            let lattice = NamedLattice::new(LatticeKind::parse(&a.lattice)?, a.dim)?;
            let est = nsm_monte_carlo(&lattice, a.samples, seed)?;
            writeln!(out, "lattice,dim,samples,nsm,std_err")?;
            writeln!(
                out,
                "{},{},{},{:.6},{:.6}",
                lattice.kind().name(),
                a.dim,
                est.samples,
                est.nsm,
                est.std_err
            )?;
        }
        Command::Gen(a) => {
            let path = r.path("out", a.out)?;
            let source = load_source(&mut r, a.source, a.seed)?;
            r.print("gen", err);
            write_vectors(&path, &source)?;
            let _ = writeln!(
                err,
                "{} vectors of dim {} -> {}",
                source.len(),
                source.dim(),
                path.display()
            );
        }
    }
    Ok(())
}

/// Process exit code for an error: 1 for numerical or stream corruption
/// failures, 2 for anything the user can fix by changing inputs.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonFinite(_)
        | Error::CorruptStream(_)
        | Error::RoundTripMismatch { .. }
        | Error::SingularBasis { .. } => 1,
        _ => 2,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code. `env_seed` stands in for `LVQLAB_SEED`.
pub fn run_with<I, T>(
    args: I,
    env_seed: Option<String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(cli, env_seed, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// [`run_with`] on the process arguments, environment and standard streams.
pub fn run() -> i32 {
    let env_seed = std::env::var("LVQLAB_SEED").ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(
        std::env::args_os(),
        env_seed,
        &mut stdout.lock(),
        &mut stderr.lock(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str], env_seed: Option<&str>) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(
            std::iter::once("lvqlab").chain(args.iter().copied()),
            env_seed.map(String::from),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn nsm_of_z2() {
        let (code, out, err) = run_args(&["nsm", "zn", "2", "200000"], None);
        assert_eq!(code, 0, "{err}");
        let row = out.lines().nth(1).unwrap();
        let g: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!((g - 1.0 / 12.0).abs() < 0.001);
        assert!(err.contains("lattice = zn"));
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run_args(&["train", "--bogus"], None).0, 2);
        assert_eq!(run_args(&[], None).0, 2);
        assert_eq!(run_args(&["--help"], None).0, 0);
    }

    #[test]
    fn e8_needs_divisible_dim() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("m.slvm");
        let (code, _, err) = run_args(
            &[
                "train",
                "--source",
                "ar1:n=10,rho=0.5,var=1,count=100",
                "--quantizer",
                "e8",
                "--out",
                out.to_str().unwrap(),
            ],
            None,
        );
        assert_eq!(code, 2);
        assert!(err.contains("divisible by 8"), "{err}");
    }

    #[test]
    fn precedence_flag_file_env() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("cfg.txt");
        fs::write(&cfg, "# settings\nseed = 5\n").unwrap();
        let c = cfg.to_str().unwrap();
        let seed_of = |err: &str| {
            err.lines()
                .find_map(|l| l.trim_start_matches('#').trim().strip_prefix("seed = "))
                .unwrap()
                .to_string()
        };
        let (_, _, err) = run_args(
            &["nsm", "zn", "1", "10", "--seed", "9", "--config", c],
            Some("7"),
        );
        assert_eq!(seed_of(&err), "9");
        let (_, _, err) = run_args(&["nsm", "zn", "1", "10", "--config", c], Some("7"));
        assert_eq!(seed_of(&err), "5");
        let (_, _, err) = run_args(&["nsm", "zn", "1", "10"], Some("7"));
        assert_eq!(seed_of(&err), "7");
        let (_, _, err) = run_args(&["nsm", "zn", "1", "10"], None);
        assert_eq!(seed_of(&err), "0");
        let (code, _, _) = run_args(&["nsm", "zn", "1", "10"], Some("x"));
        assert_eq!(code, 2);
    }

    #[test]
    fn malformed_curve_csv() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.csv");
        fs::write(&bad, "lambda,target\n1,2\n").unwrap();
        let b = bad.to_str().unwrap();
        assert_eq!(run_args(&["bdrate", b, b], None).0, 2);
    }
}
