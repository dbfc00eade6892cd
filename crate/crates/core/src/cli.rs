//! The `pictc` command line.
//!
//! Every subcommand writes CSV (default) or JSON to stdout or, with
//! `--output`, to a file that only appears once the command has succeeded.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{bp_threshold, de_run_observed, DeControl, Ensemble, Schedule};
use crate::error::{Error, Result};
use crate::pic::{InterleaverKind, PicConfig, Rational};
use crate::rate::{finite_rate, RateAccounting, RateRow};
use crate::selftest;
use crate::sim::{run_ber_experiment, ErrorAccounting};
use crate::transfer::{mc_transfer_estimate, TransferFn};
use crate::trellis::{RscSpec, Trellis};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "PICTC_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SELFTEST: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pictc", version, about = "Partially information-coupled turbo codes on the BEC")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads (default: $PICTC_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Finite-length and asymptotic code rates.
    Rate(RateArgs),
    /// Exact constituent transfer functions, optionally with Monte-Carlo estimates.
    Transfer(TransferArgs),
    /// Density-evolution BP thresholds.
    Threshold(ThresholdArgs),
    /// Per-iteration density-evolution profiles.
    DeTrace(DeTraceArgs),
    /// Monte-Carlo BER of a coupled chain.
    Simulate(SimulateArgs),
    /// Oracle-equivalence suites.
    Selftest(SelftestArgs),
}

fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    s.trim().parse::<Rational>().map_err(|e| format!("{s:?} is not a rational such as 1/8: {e}"))
}

fn parse_interleaver(s: &str) -> std::result::Result<InterleaverKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_spec(s: &str) -> std::result::Result<RscSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Chain parameters; flags override the config file.
#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Coupling ratio as an exact rational, e.g. 1/8.
    #[arg(long, value_parser = parse_rational)]
    pub lambda: Option<Rational>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    /// Interleaver seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Octal feedback,feedforward pair.
    #[arg(long, value_parser = parse_spec)]
    pub generators: Option<RscSpec>,
    /// Interleaver family: random or s-random.
    #[arg(long, value_parser = parse_interleaver)]
    pub interleaver: Option<InterleaverKind>,
}

impl ChainArgs {
    pub fn resolve(&self) -> Result<PicConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
                PicConfig::parse_kv(&text)?
            }
            None => PicConfig::default(),
        };
        if let Some(k) = self.k {
            cfg.k = k;
            cfg.n = 3 * k;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(l) = self.l {
            cfg.l = l;
        }
        if let Some(lambda) = self.lambda {
            cfg.lambda = lambda;
        }
        if let Some(m) = self.m {
            cfg.m = m;
        }
        if let Some(s) = self.max_sweeps {
            cfg.max_sweeps = s;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(g) = self.generators {
            cfg.spec = g;
        }
        if let Some(i) = self.interleaver {
            cfg.interleaver = i;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AccountingArg {
    Published,
    Layout,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Print only the L -> infinity rate.
    #[arg(long)]
    pub asymptotic: bool,
    /// Charging of zero padding.
    #[arg(long, value_enum, default_value_t = AccountingArg::Published)]
    pub accounting: AccountingArg,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    /// Systematic erasure probabilities (default 0.1, 0.2, ..., 0.9).
    #[arg(long = "p", value_delimiter = ',')]
    pub p_bar: Vec<f64>,
    /// Parity erasure probabilities (default 0.1, 0.2, ..., 0.9).
    #[arg(long = "q", value_delimiter = ',')]
    pub q_bar: Vec<f64>,
    #[arg(long, value_parser = parse_spec, default_value = "7,5")]
    pub generators: RscSpec,
    /// Also estimate by simulating a block of this length.
    #[arg(long)]
    pub mc_length: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Jacobi,
    GaussSeidel,
}

impl From<ScheduleArg> for Schedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Jacobi => Schedule::Jacobi,
            ScheduleArg::GaussSeidel => Schedule::GaussSeidel,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DeArgs {
    #[arg(long, value_parser = parse_spec, default_value = "7,5")]
    pub generators: RscSpec,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Jacobi)]
    pub schedule: ScheduleArg,
    /// Decodable once the largest a-posteriori erasure probability drops below this.
    #[arg(long, default_value_t = 1e-6)]
    pub target: f64,
    /// Stuck once no probability moves by more than this.
    #[arg(long, default_value_t = 1e-10)]
    pub stall: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iterations: usize,
}

impl DeArgs {
    fn control(&self) -> DeControl {
        DeControl {
            target: self.target,
            stall: self.stall,
            max_iterations: self.max_iterations,
            schedule: self.schedule.into(),
        }
    }
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Coupling ratios.
    #[arg(long, value_parser = parse_rational, value_delimiter = ',', required = true)]
    pub lambda: Vec<Rational>,
    /// Coupling memories.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub m: Vec<usize>,
    #[arg(long = "L", default_value_t = 100)]
    pub l: usize,
    /// Bisection bracket width.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[command(flatten)]
    pub de: DeArgs,
}

#[derive(Debug, Args)]
pub struct DeTraceArgs {
    #[arg(long, value_parser = parse_rational)]
    pub lambda: Rational,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long = "L", default_value_t = 100)]
    pub l: usize,
    #[arg(long)]
    pub epsilon: f64,
    /// Emit every n-th iteration (the last one is always emitted).
    #[arg(long, default_value_t = 1)]
    pub every: usize,
    #[command(flatten)]
    pub de: DeArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Channel erasure probabilities.
    #[arg(long, value_delimiter = ',', required = true)]
    pub epsilon: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub master_seed: u64,
    /// Count an unresolved erasure as half a bit error.
    #[arg(long)]
    pub half_erasures: bool,
    /// Add a wall_time column (breaks byte-identical reruns).
    #[arg(long)]
    pub wall_time: bool,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Buffered destination that is committed only on success.
struct Sink {
    buf: Vec<u8>,
    path: Option<PathBuf>,
}

impl Sink {
    fn new(path: Option<PathBuf>) -> Self {
        Sink { buf: Vec::new(), path }
    }

    fn commit(self) -> io::Result<()> {
        match self.path {
            None => {
                let mut out = io::stdout().lock();
                out.write_all(&self.buf)?;
                out.flush()
            }
            Some(path) => write_atomic(&path, &self.buf),
        }
    }
}

/// Writes through a temporary file in the target directory and renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn emit<T: Serialize>(format: Format, rows: &[T], out: &mut Vec<u8>) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
            }
            w.flush().map_err(|e| Error::Parse(e.to_string()))?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, rows).map_err(|e| Error::Parse(e.to_string()))?;
            out.push(b'\n');
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct AsymptoticRow {
    lambda: String,
    asymptotic_rate: f64,
}

#[derive(Serialize)]
pub struct TransferRow {
    pub p_bar: f64,
    pub q_bar: f64,
    #[serde(rename = "Fp")]
    pub fp: f64,
    #[serde(rename = "Fq")]
    pub fq: f64,
    #[serde(rename = "Fp_mc")]
    pub fp_mc: Option<f64>,
    #[serde(rename = "Fq_mc")]
    pub fq_mc: Option<f64>,
}

#[derive(Serialize)]
pub struct ThresholdRow {
    pub lambda: String,
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub eps_bp: f64,
    pub bracket_width: f64,
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    t: usize,
    #[serde(rename = "p_U")]
    p_upper: f64,
    #[serde(rename = "p_L")]
    p_lower: f64,
    p_u: f64,
}

#[derive(Serialize)]
struct SelftestRow {
    suite: String,
    instances: usize,
    failures: usize,
    passed: bool,
    detail: String,
}

fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn unit_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn rate(args: &RateArgs, format: Format, out: &mut Vec<u8>) -> Result<()> {
    let cfg = args.chain.resolve()?;
    let accounting = match args.accounting {
        AccountingArg::Published => RateAccounting::Published,
        AccountingArg::Layout => RateAccounting::Layout,
    };
    let r = finite_rate(&cfg, accounting);
    if args.asymptotic {
        let row = AsymptoticRow {
            lambda: cfg.lambda.to_string(),
            asymptotic_rate: r.asymptotic_f64(),
        };
        emit(format, &[row], out)
    } else {
        emit(format, &[RateRow::new(&cfg, &r)], out)
    }
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} = {v} outside [0, 1]")))
    }
}

/// Rows of the `transfer` report.
pub fn transfer_rows(
    spec: RscSpec,
    p_bar: &[f64],
    q_bar: &[f64],
    mc_length: Option<usize>,
    seed: u64,
) -> Result<Vec<TransferRow>> {
    for &p in p_bar {
        check_probability("p", p)?;
    }
    for &q in q_bar {
        check_probability("q", q)?;
    }
    let trellis = Trellis::new(spec);
    let f = TransferFn::new(&trellis);
    let points: Vec<(usize, f64, f64)> = p_bar
        .iter()
        .flat_map(|&p| q_bar.iter().map(move |&q| (p, q)))
        .enumerate()
        .map(|(i, (p, q))| (i, p, q))
        .collect();
    points
        .par_iter()
        .map(|&(i, p, q)| {
            let v = f.eval(p, q);
            let mc = match mc_length {
                Some(len) => Some(mc_transfer_estimate(&trellis, p, q, len, seed.wrapping_add(i as u64))?),
                None => None,
            };
            Ok(TransferRow {
                p_bar: p,
                q_bar: q,
                fp: v.fp,
                fq: v.fq,
                fp_mc: mc.map(|e| e.fp),
                fq_mc: mc.map(|e| e.fq),
            })
        })
        .collect()
}

fn transfer(args: &TransferArgs, format: Format, out: &mut Vec<u8>) -> Result<()> {
    let p = if args.p_bar.is_empty() { unit_grid() } else { args.p_bar.clone() };
    let q = if args.q_bar.is_empty() { unit_grid() } else { args.q_bar.clone() };
    let rows = transfer_rows(args.generators, &p, &q, args.mc_length, args.seed)?;
    emit(format, &rows, out)
}

fn check_ensemble(l: usize, lambda: Rational, m: usize) -> Result<()> {
    if l == 0 || m == 0 {
        return Err(Error::InvalidConfig("L and m must be positive".into()));
    }
    if lambda < Rational::from_integer(0) || lambda > Rational::new(1, 2) {
        return Err(Error::InvalidConfig(format!("coupling ratio {lambda} outside [0, 1/2]")));
    }
    Ok(())
}

/// Rows of the `threshold` report, one per (λ, m) in argument order.
pub fn threshold_rows(lambdas: &[Rational], ms: &[usize], l: usize, tol: f64, de: &DeArgs) -> Result<Vec<ThresholdRow>> {
    if !(1e-5..1.0).contains(&tol) {
        return Err(Error::InvalidConfig(format!("tolerance {tol} outside [1e-5, 1)")));
    }
    let jobs: Vec<(Rational, usize)> = lambdas.iter().flat_map(|&lam| ms.iter().map(move |&m| (lam, m))).collect();
    for &(lam, m) in &jobs {
        check_ensemble(l, lam, m)?;
    }
    let transfer = TransferFn::new(&Trellis::new(de.generators));
    let control = de.control();
    Ok(jobs
        .par_iter()
        .map(|&(lam, m)| {
            let res = bp_threshold(Ensemble::new(l, to_f64(lam), m), tol, &transfer, &control);
            ThresholdRow {
                lambda: lam.to_string(),
                m,
                l,
                eps_bp: res.eps_bp,
                bracket_width: res.bracket_width,
            }
        })
        .collect())
}

fn threshold(args: &ThresholdArgs, format: Format, out: &mut Vec<u8>) -> Result<()> {
    let rows = threshold_rows(&args.lambda, &args.m, args.l, args.tol, &args.de)?;
    emit(format, &rows, out)
}

fn de_trace(args: &DeTraceArgs, format: Format, out: &mut Vec<u8>) -> Result<()> {
    check_ensemble(args.l, args.lambda, args.m)?;
    check_probability("epsilon", args.epsilon)?;
    if args.every == 0 {
        return Err(Error::InvalidConfig("--every must be positive".into()));
    }
    let transfer = TransferFn::new(&Trellis::new(args.de.generators));
    let mut rows = Vec::new();
    let mut last = None;
    let push = |rows: &mut Vec<TraceRow>, s: &crate::density::DeState| {
        for t in 0..s.len() {
            rows.push(TraceRow {
                iteration: s.iteration,
                t,
                p_upper: s.p_upper[t],
                p_lower: s.p_lower[t],
                p_u: s.app_erasure(t),
            });
        }
    };
    let outcome = de_run_observed(
        Ensemble::new(args.l, to_f64(args.lambda), args.m),
        args.epsilon,
        &transfer,
        &args.de.control(),
        |s| {
            if s.iteration % args.every == 0 {
                push(&mut rows, s);
            }
            last = Some(s.iteration);
        },
    );
    if last.is_some_and(|it| it % args.every != 0) {
        push(&mut rows, &outcome.state);
    }
    emit(format, &rows, out)
}

fn simulate(args: &SimulateArgs, format: Format, out: &mut Vec<u8>) -> Result<()> {
    let cfg = args.chain.resolve()?;
    let accounting = if args.half_erasures {
        ErrorAccounting::Half
    } else {
        ErrorAccounting::Full
    };
    let mut records = run_ber_experiment(&cfg, &args.epsilon, args.trials, args.master_seed, accounting)?;
    if !args.wall_time {
        for r in &mut records {
            r.wall_time = None;
        }
    }
    emit(format, &records, out)
}

fn run_selftest(args: &SelftestArgs, format: Format, out: &mut Vec<u8>) -> Result<bool> {
    let reports = selftest::run_all(args.seed)?;
    for r in &reports {
        eprintln!("{}", r.line());
    }
    let rows: Vec<SelftestRow> = reports
        .iter()
        .map(|r| SelftestRow {
            suite: r.name.clone(),
            instances: r.instances,
            failures: r.failures,
            passed: r.passed(),
            detail: r.detail.clone(),
        })
        .collect();
    emit(format, &rows, out)?;
    Ok(reports.iter().all(|r| r.passed()))
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    let mut sink = Sink::new(cli.output.clone());
    let result = match &cli.command {
        Command::Rate(a) => rate(a, cli.format, &mut sink.buf).map(|_| true),
        Command::Transfer(a) => transfer(a, cli.format, &mut sink.buf).map(|_| true),
        Command::Threshold(a) => threshold(a, cli.format, &mut sink.buf).map(|_| true),
        Command::DeTrace(a) => de_trace(a, cli.format, &mut sink.buf).map(|_| true),
        Command::Simulate(a) => simulate(a, cli.format, &mut sink.buf).map(|_| true),
        Command::Selftest(a) => run_selftest(a, cli.format, &mut sink.buf),
    };
    match result {
        Ok(passed) => {
            if let Err(e) = sink.commit() {
                eprintln!("error: {e}");
                return EXIT_FAILURE;
            }
            if passed {
                EXIT_OK
            } else {
                EXIT_SELFTEST
            }
        }
        Err(e @ (Error::InvalidConfig(_) | Error::Parse(_) | Error::InvalidGenerator(_))) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

/// Parses `argv` and runs it.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
    }
}
