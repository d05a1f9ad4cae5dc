//! Command-line front end.
//!
//! Settings come from an optional JSON or TOML file (`--config`), then the
//! `QUANTOR_SEED` environment variable, then flags, each overriding the one
//! before. Exit codes: 0 ok, 1 an asserted check failed, 2 configuration or
//! input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::distortion::{distortion, Quantizer};
use crate::distribution::{DistKind, Distribution};
use crate::error::{QuantError, Result};
use crate::optimize::{
    best_of, multistart, sweep, EmptyCellPolicy, Method, OptimizerConfig, StopReason,
};
use crate::space::NormedSpace;
use crate::verify::{
    counterexample_suite, gradcheck_laws, gradcheck_suite, local_min_probe, random_tuple,
    stationarity_check, theorem_a_check, CounterexampleConfig, GradCheckRow,
    ProbeConfig, ProbeVerdict, StationarityReport, Strictness, TheoremAReport, Tolerance,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Offset of the stream used to evaluate a result independently of the
/// optimization pool.
const CHECK_STREAM: u64 = 1 << 30;

#[derive(Parser, Debug)]
#[command(name = "quantor", version, about = "L^r-optimal quantization on normed spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Optimize an n-point quantizer and write quantizer, trace and summary.
    Quantize(QuantizeArgs),
    /// Check stationarity and local minimality of a quantizer file.
    Verify(VerifyArgs),
    /// Best distortion over multistarts for a range of levels.
    Sweep(SweepArgs),
    /// Reproduce the uniform-interval local minima outside the support.
    Counterexample(CounterexampleArgs),
    /// Compare the analytic gradient with central finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// JSON or TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Distribution, e.g. `uniform:-1,1`, `normal:0,1`, `gaussian:2,0,1`,
    /// `disk:0,0,1`, `brownian:64,16`, `empirical:points.csv`.
    #[arg(long)]
    pub dist: Option<String>,
    /// Norm override: `euclidean`, `lp:P`, `lp_grid:P`, `l1_grid`.
    #[arg(long)]
    pub space: Option<String>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, env = "QUANTOR_SEED")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Samples per expectation.
    #[arg(long)]
    pub n_samples: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct OptimizerArgs {
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, value_enum)]
    pub empty_cell_policy: Option<PolicyArg>,
    /// Random starts; the best result is kept.
    #[arg(long)]
    pub starts: Option<usize>,
}

#[derive(Args, Debug)]
pub struct QuantizeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub opt: OptimizerArgs,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Quantizer JSON file.
    pub quantizer: PathBuf,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub probe: ProbeArgs,
    /// Exit 1 unless the quantizer is stationary.
    #[arg(long)]
    pub assert_stationary: bool,
    /// Exit 1 unless the probe classifies the quantizer as a strict minimum.
    #[arg(long)]
    pub assert_strict: bool,
    /// Exit 1 if the probe finds a better tuple.
    #[arg(long)]
    pub assert_local_min: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ProbeArgs {
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Samples per probe evaluation.
    #[arg(long)]
    pub probe_samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub opt: OptimizerArgs,
    /// Level range `LO..HI` (inclusive) or a single level.
    #[arg(long)]
    pub n_range: Option<String>,
    /// Add a wall-time column (breaks byte-identical reruns).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct CounterexampleArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub probe: ProbeArgs,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of random tuples.
    #[arg(long, default_value_t = 20)]
    pub tuples: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Lloyd,
    Cellwise,
    GradientDescent,
    Stochastic,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Lloyd => Method::Lloyd,
            MethodArg::Cellwise => Method::Cellwise,
            MethodArg::GradientDescent => Method::GradientDescent,
            MethodArg::Stochastic => Method::Stochastic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    ResampleFromSupport,
    Freeze,
}

impl From<PolicyArg> for EmptyCellPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::ResampleFromSupport => EmptyCellPolicy::ResampleFromSupport,
            PolicyArg::Freeze => EmptyCellPolicy::Freeze,
        }
    }
}

/// A distribution given as descriptor string or as a tagged object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistArg {
    Text(String),
    Kind(DistKind),
}

/// A norm given as string or as a space descriptor object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceArg {
    Text(String),
    Space(NormedSpace),
}

/// File form of the run settings. Every field is optional; flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub dist: Option<DistArg>,
    pub space: Option<SpaceArg>,
    pub r: Option<f64>,
    pub n: Option<usize>,
    pub n_range: Option<[usize; 2]>,
    pub optimizer: Option<OptimizerConfig>,
    pub starts: Option<usize>,
    pub probe: Option<ProbeConfig>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub n_samples: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        if is_toml {
            toml::from_str(&text).map_err(|e| QuantError::Parse(e.to_string()))
        } else {
            serde_json::from_str(&text).map_err(|e| QuantError::Parse(e.to_string()))
        }
    }
}

fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| QuantError::Parse(format!("not a number: {t:?}")))
        })
        .collect()
}

fn parse_count(v: f64, what: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(QuantError::Parse(format!("{what} must be a positive integer")))
    }
}

/// Parses a distribution descriptor string.
pub fn parse_dist(text: &str, seed: u64) -> Result<Distribution> {
    let (name, rest) = text.split_once(':').unwrap_or((text, ""));
    let arity = |v: &[f64], k: usize| {
        if v.len() == k {
            Ok(())
        } else {
            Err(QuantError::Parse(format!("{name} takes {k} parameters")))
        }
    };
    match name {
        "uniform" => {
            let v = parse_numbers(rest)?;
            arity(&v, 2)?;
            Distribution::uniform_interval(v[0], v[1], seed)
        }
        "normal" => {
            let v = parse_numbers(rest)?;
            arity(&v, 2)?;
            Distribution::gaussian_iso(1, v[0], v[1], seed)
        }
        "gaussian" => {
            let v = parse_numbers(rest)?;
            arity(&v, 3)?;
            Distribution::gaussian_iso(parse_count(v[0], "dimension")?, v[1], v[2], seed)
        }
        "disk" => {
            let v = parse_numbers(rest)?;
            if v.len() < 2 {
                return Err(QuantError::Parse("disk takes a center and a radius".into()));
            }
            let (c, r) = v.split_at(v.len() - 1);
            Distribution::uniform_disk(c.to_vec(), r[0], seed)
        }
        "brownian" => {
            let v = parse_numbers(rest)?;
            arity(&v, 2)?;
            Distribution::brownian_kl(parse_count(v[0], "m")?, parse_count(v[1], "K")?, seed)
        }
        "empirical" => Distribution::empirical_from_csv(rest, seed),
        _ => Err(QuantError::Parse(format!("unknown distribution {name:?}"))),
    }
}

/// Parses a norm override for a space of dimension `dim`.
pub fn parse_space(text: &str, dim: usize) -> Result<NormedSpace> {
    let (name, rest) = text.split_once(':').unwrap_or((text, ""));
    let p = || {
        rest.trim()
            .parse::<f64>()
            .map_err(|_| QuantError::Parse(format!("{name} needs an exponent")))
    };
    match name {
        "euclidean" => NormedSpace::euclidean(dim),
        "lp" => NormedSpace::lp_sequence(dim, p()?),
        "lp_grid" => NormedSpace::lp_grid(dim, p()?),
        "l1_grid" => NormedSpace::l1_grid(dim),
        _ => Err(QuantError::Parse(format!("unknown space {name:?}"))),
    }
}

/// Settings after merging file, environment and flags.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub dist: Distribution,
    pub seed: u64,
    pub r: f64,
    pub out: PathBuf,
    pub format: Option<Format>,
    pub n_samples: Option<usize>,
    pub file: RunConfig,
}

fn resolve(common: &Common) -> Result<Resolved> {
    let file = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = common.seed.or(file.seed).unwrap_or(0);
    let dist = match (&common.dist, &file.dist) {
        (Some(text), _) | (None, Some(DistArg::Text(text))) => parse_dist(text, seed)?,
        (None, Some(DistArg::Kind(kind))) => Distribution::new(kind.clone(), seed)?,
        (None, None) => return Err(QuantError::InvalidParameter("missing --dist".into())),
    };
    let space = match (&common.space, &file.space) {
        (Some(text), _) | (None, Some(SpaceArg::Text(text))) => Some(parse_space(text, dist.dim())?),
        (None, Some(SpaceArg::Space(s))) => Some(s.clone()),
        (None, None) => None,
    };
    let dist = match space {
        Some(s) => dist.with_space(s)?,
        None => dist,
    };
    let r = common.r.or(file.r).unwrap_or(2.0);
    if !(r > 0.0 && r.is_finite()) {
        return Err(QuantError::InvalidParameter("r must be positive".into()));
    }
    Ok(Resolved {
        dist,
        seed,
        r,
        out: common.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from(".")),
        format: common.format.or(file.format),
        n_samples: common.n_samples.or(file.n_samples),
        file,
    })
}

fn optimizer_config(res: &Resolved, opt: &OptimizerArgs, space: &NormedSpace) -> Result<OptimizerConfig> {
    let mut cfg = res.file.optimizer.clone().unwrap_or_default();
    if let Some(m) = opt.method {
        cfg.method = m.into();
    } else if res.file.optimizer.is_none() {
        cfg.method = if res.r == 2.0 && space.is_hilbert() { Method::Lloyd } else { Method::Cellwise };
    }
    if let Some(v) = opt.max_iters {
        cfg.max_iters = v;
    }
    if let Some(p) = opt.empty_cell_policy {
        cfg.empty_cell_policy = p.into();
    }
    if let Some(n) = res.n_samples {
        cfg.n_samples = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QuantizeSummary {
    pub dist: Distribution,
    pub r: f64,
    pub n: usize,
    pub method: Method,
    pub starts: usize,
    pub stop: StopReason,
    pub distortion: f64,
    pub std_error: f64,
    /// `e_r = G^{1/r}`.
    pub quantization_error: f64,
    pub residual_norms: Vec<f64>,
    pub normalized_residuals: Vec<f64>,
    pub stationary: bool,
}

fn cmd_quantize(args: &QuantizeArgs) -> Result<i32> {
    let res = resolve(&args.common)?;
    let n = args.n.or(res.file.n).unwrap_or(2);
    if n == 0 {
        return Err(QuantError::InvalidParameter("n must be >= 1".into()));
    }
    let space = res.dist.space().clone();
    let cfg = optimizer_config(&res, &args.opt, &space)?;
    let starts = args.opt.starts.or(res.file.starts).unwrap_or(4).max(1);
    let traces = multistart(&res.dist, &space, res.r, n, starts, &cfg)?;
    let best = best_of(traces).expect("at least one start");
    let q = &best.quantizer;
    let est = distortion(&res.dist, q, cfg.n_samples, CHECK_STREAM)?;
    let stat = if res.r >= 1.0 {
        Some(stationarity_check(&res.dist, q, cfg.n_samples, CHECK_STREAM + 1, Tolerance::default())?)
    } else {
        None
    };
    ensure_dir(&res.out)?;
    write_json(&res.out.join("quantizer.json"), q)?;
    best.write_jsonl(fs::File::create(res.out.join("trace.jsonl"))?)?;
    let summary = QuantizeSummary {
        dist: res.dist.clone(),
        r: res.r,
        n,
        method: cfg.method,
        starts,
        stop: best.stop,
        distortion: est.mean,
        std_error: est.std_error,
        quantization_error: est.error(res.r),
        residual_norms: stat.as_ref().map(|s| s.residual_norms.clone()).unwrap_or_default(),
        normalized_residuals: stat.as_ref().map(|s| s.normalized_residuals.clone()).unwrap_or_default(),
        stationary: stat.as_ref().is_some_and(|s| s.is_stationary()),
    };
    write_json(&res.out.join("summary.json"), &summary)?;
    println!(
        "distortion {:.6e} (se {:.1e}), e_r {:.6e}, stop {:?}",
        summary.distortion, summary.std_error, summary.quantization_error, summary.stop
    );
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub quantizer: Quantizer,
    pub stationarity: Option<StationarityReport>,
    pub probe: ProbeVerdict,
    pub theorem_a: Option<TheoremAReport>,
    pub assertions: Vec<Assertion>,
}

fn probe_config(res: &Resolved, args: &ProbeArgs, stream: u64) -> ProbeConfig {
    let base = res.file.probe.unwrap_or(ProbeConfig { stream, ..Default::default() });
    ProbeConfig {
        radius: args.radius.unwrap_or(base.radius),
        trials: args.trials.unwrap_or(base.trials),
        n_samples: args.probe_samples.unwrap_or(base.n_samples),
        stream: base.stream,
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let res = resolve(&args.common)?;
    let text = fs::read_to_string(&args.quantizer)?;
    let q: Quantizer = serde_json::from_str(&text)
        .map_err(|e| QuantError::Parse(format!("{}: {e}", args.quantizer.display())))?;
    if q.space.dim() != res.dist.dim() {
        return Err(QuantError::DimensionMismatch { expected: res.dist.dim(), got: q.space.dim() });
    }
    let dist = res.dist.clone().with_space(q.space.clone())?;
    let n_samples = res.n_samples.unwrap_or(200_000);
    let stationarity = if q.r >= 1.0 {
        Some(stationarity_check(&dist, &q, n_samples, CHECK_STREAM, Tolerance::default())?)
    } else {
        None
    };
    let probe = local_min_probe(&dist, &q, &probe_config(&res, &args.probe, CHECK_STREAM + 2))?;
    let theorem_a = Some(theorem_a_check(&dist, &q, n_samples, CHECK_STREAM + 3, Some(&probe))?);
    let mut assertions = Vec::new();
    if args.assert_stationary {
        let passed = stationarity.as_ref().is_some_and(|s| s.is_stationary());
        assertions.push(Assertion { name: "stationary".into(), passed });
    }
    if args.assert_strict {
        let passed = probe.strictness == Strictness::Strict;
        assertions.push(Assertion { name: "strict".into(), passed });
    }
    if args.assert_local_min {
        let passed = probe.strictness != Strictness::Refuted;
        assertions.push(Assertion { name: "local_min".into(), passed });
    }
    let report = VerifyReport { quantizer: q, stationarity, probe, theorem_a, assertions };
    ensure_dir(&res.out)?;
    write_json(&res.out.join("verify.json"), &report)?;
    let verdict = report
        .stationarity
        .as_ref()
        .map(|s| format!("{:?}", s.verdict))
        .unwrap_or_else(|| "n/a".into());
    println!("stationarity {verdict}, probe {:?}", report.probe.strictness);
    Ok(if report.assertions.iter().all(|a| a.passed) { EXIT_OK } else { EXIT_ASSERTION })
}

fn parse_range(text: &str) -> Result<(usize, usize)> {
    let bad = || QuantError::Parse(format!("bad level range {text:?}"));
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (text, text),
    };
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo == 0 || hi < lo {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let res = resolve(&args.common)?;
    let (lo, hi) = match (&args.n_range, res.file.n_range) {
        (Some(t), _) => parse_range(t)?,
        (None, Some([a, b])) if a >= 1 && b >= a => (a, b),
        (None, Some(_)) => return Err(QuantError::Parse("bad n_range".into())),
        (None, None) => (1, 4),
    };
    let space = res.dist.space().clone();
    let cfg = optimizer_config(&res, &args.opt, &space)?;
    let starts = args.opt.starts.or(res.file.starts).unwrap_or(4).max(1);
    let rows = sweep(&res.dist, &space, res.r, lo..=hi, starts, &cfg)?;
    ensure_dir(&res.out)?;
    match res.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv::Writer::from_path(res.out.join("sweep.csv"))?;
            let mut header = vec!["n", "distortion", "std_error", "residual"];
            if args.timing {
                header.push("wall_time_s");
            }
            w.write_record(&header)?;
            for row in &rows {
                let mut rec = vec![
                    row.n.to_string(),
                    format!("{:e}", row.distortion),
                    format!("{:e}", row.std_error),
                    format!("{:e}", row.residual),
                ];
                if args.timing {
                    rec.push(format!("{:.3}", row.wall_time_s));
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut rows = rows.clone();
            if !args.timing {
                rows.iter_mut().for_each(|r| r.wall_time_s = 0.0);
            }
            write_json(&res.out.join("sweep.json"), &rows)?;
        }
    }
    for row in &rows {
        println!("n={:<3} distortion {:.6e} residual {:.2e}", row.n, row.distortion, row.residual);
        eprintln!("n={} wall time {:.2}s", row.n, row.wall_time_s);
    }
    Ok(EXIT_OK)
}

fn cmd_counterexample(args: &CounterexampleArgs) -> Result<i32> {
    let file = match &args.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = args.common.seed.or(file.seed).unwrap_or(0);
    let defaults = CounterexampleConfig::default();
    let base_probe = file.probe.unwrap_or(defaults.probe);
    let cfg = CounterexampleConfig {
        seed,
        n_samples: args.common.n_samples.or(file.n_samples).unwrap_or(defaults.n_samples),
        probe: ProbeConfig {
            radius: args.probe.radius.unwrap_or(base_probe.radius),
            trials: args.probe.trials.unwrap_or(base_probe.trials),
            n_samples: args.probe.probe_samples.unwrap_or(base_probe.n_samples),
            stream: base_probe.stream,
        },
        rs: match args.common.r.or(file.r) {
            Some(r) => vec![r],
            None => defaults.rs,
        },
    };
    let report = counterexample_suite(&cfg)?;
    let out = args.common.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(&out)?;
    write_json(&out.join("counterexample.json"), &report)?;
    for c in &report.cases {
        println!(
            "r={}: G(0,3)={:.5} G(-0.5,0.5)={:.5} probes {:?}/{:?}/{:?} reproduced={}",
            c.r,
            c.pair.distortion.mean,
            c.symmetric.distortion.mean,
            c.pair.probe.strictness,
            c.triple.probe.strictness,
            c.symmetric.probe.strictness,
            c.reproduced
        );
    }
    if report.large_radius {
        println!("radius > 1/2: refutations of the outer configurations are expected");
    }
    Ok(if report.reproduced { EXIT_OK } else { EXIT_ASSERTION })
}

fn cmd_gradcheck(args: &GradcheckArgs) -> Result<i32> {
    let file = match &args.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let has_dist = args.common.dist.is_some() || file.dist.is_some();
    let seed = args.common.seed.or(file.seed).unwrap_or(0);
    let n_samples = args.common.n_samples.or(file.n_samples).unwrap_or(20_000);
    let (rows, out, format): (Vec<GradCheckRow>, PathBuf, Option<Format>) = if has_dist {
        let res = resolve(&args.common)?;
        let n = args.n.or(res.file.n).unwrap_or(2);
        let mut rows = Vec::with_capacity(args.tuples);
        for t in 0..args.tuples {
            let q = random_tuple(&res.dist, res.r, n, 1000 + t as u64)?;
            rows.push(crate::verify::gradient_check(&res.dist, &q, args.eps, n_samples, t as u64)?);
        }
        (rows, res.out, res.format)
    } else {
        let laws = gradcheck_laws(seed)?;
        let rows = gradcheck_suite(&laws, args.tuples, args.eps, n_samples)?;
        let out = args.common.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("."));
        (rows, out, args.common.format.or(file.format))
    };
    ensure_dir(&out)?;
    match format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv::Writer::from_path(out.join("gradcheck.csv"))?;
            for row in &rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => write_json(&out.join("gradcheck.json"), &rows)?,
    }
    let worst = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    println!("{} tuples, worst relative error {worst:.2e}", rows.len());
    Ok(if worst < args.tol { EXIT_OK } else { EXIT_ASSERTION })
}

/// Runs the CLI on the given arguments (program name first) and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Quantize(a) => cmd_quantize(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Counterexample(a) => cmd_counterexample(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, QuantError::InvalidParameter(ref m) if m.starts_with("missing --dist")) {
                eprintln!("usage: quantor <COMMAND> --dist <DIST> [OPTIONS]; see --help");
            }
            EXIT_CONFIG
        }
    }
}
