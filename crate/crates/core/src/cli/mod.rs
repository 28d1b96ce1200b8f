//! Command-line front end.

mod check;
mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{
    apriori, convergence_study, delayed_tensor_norms, lambda_r, rho_delay_prop, DelayPropInputs, StudyOutput,
};
use crate::coefficients::{validate_hypotheses, Lattice};
use crate::error::{Error, Result};
use crate::path_algebra::{holder_norm_full, two_param_norm, GridPath, TwoParamTensor};
use crate::signals::generate;
use crate::solver::solve_delay;

pub use check::{run_checks, CheckLine};
pub use config::{fmt_f64, parse_config, Config};

pub const OUT_ENV: &str = "ROUGHDELAY_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Gen,
    Solve,
    Converge,
    Check,
    Bounds,
}

#[derive(Debug, Parser)]
#[command(name = "roughdelay", about = "Rough delay equations: generation, solving and r → 0 studies")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Generate a driving signal and its tensor.
    Gen(Flags),
    /// Solve one delay problem.
    Solve(Flags),
    /// Run the r-sweep against the no-delay solution.
    Converge(Flags),
    /// Run the invariant suite.
    Check(Flags),
    /// Report a priori constants for one solve.
    Bounds(Flags),
}

#[derive(Debug, clap::Args)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    parallelism: u64,
    /// `key=value`, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// One invocation, before the config file is read.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub master_seed: Option<u64>,
    pub parallelism: usize,
    pub overrides: Vec<String>,
}

impl RunConfig {
    /// `env_out` takes precedence over `--out`.
    fn from_cli(cli: Cli, env_out: Option<OsString>) -> Self {
        let (command, f) = match cli.command {
            Sub::Gen(f) => (Command::Gen, f),
            Sub::Solve(f) => (Command::Solve, f),
            Sub::Converge(f) => (Command::Converge, f),
            Sub::Check(f) => (Command::Check, f),
            Sub::Bounds(f) => (Command::Bounds, f),
        };
        let output_dir = env_out
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .or(f.out)
            .unwrap_or_else(|| PathBuf::from("."));
        RunConfig {
            command,
            config_path: f.config,
            output_dir,
            master_seed: f.seed,
            parallelism: f.parallelism as usize,
            overrides: f.overrides,
        }
    }

    /// Reads and validates the config file plus overrides.
    pub fn load(&self) -> Result<Config> {
        let text = match &self.config_path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::Config { line: 0, msg: format!("cannot read {}: {e}", p.display()) })?,
            None => String::new(),
        };
        let cfg = parse_config(&text, &self.overrides)?;
        Ok(match self.master_seed {
            Some(s) => cfg.with_master_seed(s),
            None => cfg,
        })
    }
}

/// Files and text produced by a subcommand; nothing touches disk until
/// the whole run has succeeded.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub stdout: String,
    /// An invariant failed; files are still written.
    pub failed: bool,
}

pub fn path_csv(p: &GridPath) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((1..=p.dim()).map(|i| format!("v_{i}")));
    w.write_record(&header)?;
    let g = p.grid();
    for k in 0..g.nodes() {
        let mut row = vec![fmt_f64(g.time(k))];
        row.extend(p.point(k).iter().map(|v| fmt_f64(*v)));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// One row per step: `k, A[i][j]` flattened row-major.
pub fn tensor_csv(t: &TwoParamTensor) -> Result<Vec<u8>> {
    let (d, m) = t.dims();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["k".to_string()];
    for i in 0..d {
        for j in 0..m {
            header.push(format!("a_{i}_{j}"));
        }
    }
    w.write_record(&header)?;
    for k in 0..t.grid().steps() {
        let mut row = vec![k.to_string()];
        row.extend(t.step(k).iter().map(|v| fmt_f64(*v)));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

const CONVERGE_COLUMNS: [&str; 7] =
    ["seed", "r", "sup_err", "tensor_sup_err", "holder_err", "yy_r_tensor_norm_1", "yy_r_tensor_norm_2"];

/// The deterministic table and the wall-clock table, kept apart so the
/// former is reproducible byte for byte.
pub fn converge_csvs(out: &StudyOutput) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CONVERGE_COLUMNS)?;
    let mut rt = csv::Writer::from_writer(Vec::new());
    rt.write_record(["seed", "r", "runtime_ms"])?;
    for row in &out.rows {
        w.write_record([
            row.seed.to_string(),
            fmt_f64(row.r),
            fmt_f64(row.sup_err),
            fmt_f64(row.tensor_sup_err),
            fmt_f64(row.holder_err),
            fmt_f64(row.yy_r_tensor_norm_1),
            fmt_f64(row.yy_r_tensor_norm_2),
        ])?;
        rt.write_record([row.seed.to_string(), fmt_f64(row.r), format!("{:.3}", row.runtime_ms)])?;
    }
    let a = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let b = rt.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok((a, b))
}

fn fit_text(f: &crate::analysis::FitOutcome) -> String {
    use crate::analysis::FitOutcome::*;
    match f {
        Fitted(fit) => format!("slope={} r2={} flag={}", fit.slope, fit.r2, f.label()),
        _ => format!("slope=NA r2=NA flag={}", f.label()),
    }
}

fn gen(cfg: &Config) -> Result<Outcome> {
    let signal = generate(&cfg.problem.signal)?;
    let mut o = Outcome::default();
    o.files.push(("signal_path.csv".into(), path_csv(&signal.path)?));
    o.files.push(("signal_tensor.csv".into(), tensor_csv(&signal.tensor)?));
    let g = signal.grid();
    let _ = writeln!(o.stdout, "kind={}", cfg.problem.signal.kind.name());
    let _ = writeln!(o.stdout, "dim={}", signal.path.dim());
    let _ = writeln!(o.stdout, "t0={}", g.t0());
    let _ = writeln!(o.stdout, "steps={}", g.steps());
    let _ = writeln!(o.stdout, "seed={}", cfg.master_seed);
    Ok(o)
}

fn solve(cfg: &Config) -> Result<Outcome> {
    let p = cfg.problem.build(cfg.master_seed)?;
    let res = solve_delay(&p)?;
    let mut o = Outcome::default();
    o.files.push(("solution.csv".into(), path_csv(&res.x)?));
    o.files.push(("solution_tensor.csv".into(), tensor_csv(&res.x_tensor)?));
    let d = &res.diagnostics;
    let out = &mut o.stdout;
    let _ = writeln!(out, "r={}", res.r);
    let _ = writeln!(out, "seed={}", cfg.master_seed);
    let _ = writeln!(out, "x_T={}", join(res.x.point(res.x.grid().steps())));
    let _ = writeln!(out, "sup_norm={}", d.sup_norm);
    let _ = writeln!(out, "beta_prime_norm={}", d.beta_norm);
    let _ = writeln!(out, "two_beta_prime_norm={}", d.two_beta_norm);
    if let Some(v) = d.phi2 {
        let _ = writeln!(out, "phi2={v}");
    }
    let _ = writeln!(out, "runtime_ms={:.3}", res.runtime_ms);
    Ok(o)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

fn converge(cfg: &Config) -> Result<Outcome> {
    let out = convergence_study(&cfg.study)?;
    let (table, runtimes) = converge_csvs(&out)?;
    let mut o = Outcome::default();
    o.files.push(("converge.csv".into(), table));
    o.files.push(("converge_runtime.csv".into(), runtimes));
    for s in &out.per_seed {
        let _ = writeln!(
            o.stdout,
            "seed={} sup: {} last_over_first={} inversions={} | tensor: {} last_over_first={} inversions={}",
            s.seed,
            fit_text(&s.sup_fit),
            s.sup_last_over_first,
            s.sup_inversions,
            fit_text(&s.tensor_fit),
            s.tensor_last_over_first,
            s.tensor_inversions
        );
    }
    let _ = writeln!(o.stdout, "summary {}", fit_text(&out.pooled));
    Ok(o)
}

fn check(cfg: &Config) -> Result<Outcome> {
    let lines = run_checks(cfg)?;
    let mut o = Outcome::default();
    for l in &lines {
        let _ = writeln!(o.stdout, "{l}");
        if l.hard && !l.ok {
            o.failed = true;
        }
    }
    let hard_fail = lines.iter().filter(|l| l.hard && !l.ok).count();
    let _ = writeln!(o.stdout, "checks={} hard_failures={hard_fail}", lines.len());
    Ok(o)
}

fn bounds(cfg: &Config) -> Result<Outcome> {
    let p = cfg.problem.build(cfg.master_seed)?;
    let res = solve_delay(&p)?;
    let rep = apriori(&p, &res, cfg.k)?;
    let b = &rep.bounds;
    let mut o = Outcome::default();
    let out = &mut o.stdout;
    let _ = writeln!(out, "K={}", b.k);
    let _ = writeln!(out, "rho_eta_b_sigma={}", b.rho_eta_b_sigma);
    let _ = writeln!(out, "lambda_y={}", b.lambda_y);
    let _ = writeln!(out, "m_eta_y={}", b.m_eta_y);
    let _ = writeln!(out, "delta_tilde_y={}", b.delta_tilde_y);
    let _ = writeln!(out, "sup_xhat={}", rep.sup_xhat);
    let _ = writeln!(out, "holder_xhat={}", rep.holder_xhat);
    let _ = writeln!(out, "tensor_xhat={}", rep.tensor_xhat);
    let _ = writeln!(out, "sup_ok={}", rep.sup_ok);
    let _ = writeln!(out, "min_k_sup={}", rep.min_k[0]);
    let _ = writeln!(out, "min_k_holder={}", rep.min_k[1]);
    let _ = writeln!(out, "min_k_tensor={}", rep.min_k[2]);
    let _ = writeln!(out, "min_k_within_10={}", rep.min_k[0] <= 10.0);

    let exps = p.exps;
    let hyp = validate_hypotheses(&p.coeff, &exps, &Lattice::default());
    let _ = writeln!(out, "hypotheses_pass={}", hyp.passes());
    for f in &hyp.flags {
        let _ = writeln!(out, "hypothesis_flag={f}");
    }
    if let Some(dt) = &p.delayed {
        let bp = exps.beta_prime();
        let g = *dt.diff_by.grid();
        let n1 = two_param_norm(&dt.diff_by, 2.0 * bp, g.t0(), g.end())?;
        let n2 = two_param_norm(&dt.shifted_by_diff, 2.0 * bp, g.t0(), g.end())?;
        let xr_bp = res.diagnostics.beta_norm;
        let inputs = DelayPropInputs {
            sup_b: p.coeff.sup_b(p.t_end()),
            sup_sigma: p.coeff.sup_sigma(),
            sup_dsigma: p.coeff.sup_dsigma(),
            lambda_dsigma: p.coeff.lambda_norm_dsigma(exps.lambda()),
            sup_d2sigma: p.coeff.sup_d2sigma(),
            lambda_d2sigma: p.coeff.lambda_norm_d2sigma(exps.lambda()),
            sup_xr: xr_bp,
            sup_xhat: rep.holder_xhat,
            eta_bp: holder_norm_full(&p.eta, bp)?,
            t_end: p.t_end(),
        };
        let _ = writeln!(out, "rho_delay_prop={}", rho_delay_prop(&inputs, &exps));
        let _ = writeln!(out, "lambda_r={}", lambda_r(xr_bp, n1, n2));
    }
    let study = delayed_tensor_norms(&p.driver, &cfg.study.r_list, exps.beta_prime())?;
    for row in &study.rows {
        let _ = writeln!(
            out,
            "delayed_norms r={} diff_by={} shifted_by_diff={} by_diff={}",
            row.r, row.diff_by, row.shifted_by_diff, row.by_diff
        );
    }
    Ok(o)
}

pub fn execute(command: Command, cfg: &Config) -> Result<Outcome> {
    match command {
        Command::Gen => gen(cfg),
        Command::Solve => solve(cfg),
        Command::Converge => converge(cfg),
        Command::Check => check(cfg),
        Command::Bounds => bounds(cfg),
    }
}

/// Writes every file to a temporary sibling first, then renames.
pub fn write_atomic(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.flush()?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    }
    Ok(())
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Config { line: 0, msg: format!("output directory {}: {e}", dir.display()) })?;
    if !dir.is_dir() {
        return Err(Error::Config { line: 0, msg: format!("{} is not a directory", dir.display()) });
    }
    Ok(())
}

/// Runs a parsed invocation; returns the exit code and the summary text.
pub fn run_captured(rc: &RunConfig) -> (i32, String) {
    let cfg = match rc.load().and_then(|c| prepare_dir(&rc.output_dir).map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return (2, String::new());
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(rc.parallelism).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return (1, String::new());
        }
    };
    let outcome = pool.install(|| execute(rc.command, &cfg));
    match outcome.and_then(|o| write_atomic(&rc.output_dir, &o.files).map(|_| o)) {
        Ok(o) => (if o.failed { 1 } else { 0 }, o.stdout),
        Err(e) => {
            eprintln!("error: {e}");
            (1, String::new())
        }
    }
}

pub fn run(rc: &RunConfig) -> i32 {
    let (code, out) = run_captured(rc);
    print!("{out}");
    code
}

/// Parses command-line arguments; `env_out` is the value of [`OUT_ENV`].
pub fn parse_args<I, T>(args: I, env_out: Option<OsString>) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args).map(|cli| RunConfig::from_cli(cli, env_out))
}

/// Entry point shared by the binary and tests.
pub fn main_with<I, T>(args: I, env_out: Option<OsString>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(args, env_out) {
        Ok(rc) => run(&rc),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
