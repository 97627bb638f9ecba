//! The `rgg` command-line interface.
//!
//! Every command is deterministic given its flags (including `--seed`).
//! Flags override values from a flat JSON document passed with `--config`.
//! Errors are written to stderr as one JSON line; exit codes are 0 on
//! success, 1 when a verification suite fails, 2 on usage or validation
//! errors and 3 when a request exceeds the point budget.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::analytics::bounds::{
    calibrated_params, mean_edges, solve_lambda, variance_bracket_log, BoundEngine, BoundOptions, DomainChoice,
    GammaMode, VarianceMode,
};
use crate::analytics::radial::local_mean_a_log;
use crate::error::{invalid, Error, Result};
use crate::experiments::{convergence_sweep, moment_check, simulate, write_csv, JsonlSink, RunOptions};
use crate::geometry::Dimension;
use crate::quadrature::Tolerance;
use crate::sampling::{ModelParams, DEFAULT_POINT_BUDGET};

pub const EXIT_OK: u8 = 0;
pub const EXIT_SUITE_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "rgg", version, about = "Edge counts of random geometric graphs over Poisson point processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the Poisson and normal approximation bounds as JSON
    Bounds(BoundsCmd),
    /// Simulate the edge count and compare its law with Poisson(theta)
    Simulate(SimulateCmd),
    /// Run one simulation per delta at fixed dimension and mean; emits CSV
    Sweep(SweepCmd),
    /// Run the built-in verification suite
    Verify(VerifyCmd),
    /// Solve for the intensity giving mean edge count theta
    SolveLambda(SolveCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaModeArg {
    PaperDominating,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceModeArg {
    Quadrature,
    BracketWorst,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Space dimension d (positive integer)
    #[arg(short = 'd', long = "dim")]
    pub d: Option<usize>,
    /// Connection radius delta (length, in units of the unit-ball radius)
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Intensity lambda (expected points per unit volume)
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Natural log of the intensity, ln(points per unit volume)
    #[arg(long, allow_negative_numbers = true)]
    pub log_lambda: Option<f64>,
    /// Target mean theta of the edge count (edges); defaults to the model mean
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Derive lambda so that the mean edge count equals theta
    #[arg(long)]
    pub solve_lambda: bool,
    /// Flat JSON file with default values for any flag (snake_case keys)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Force log-domain evaluation (automatic for d >= 200 or unrepresentable magnitudes)
    #[arg(long)]
    pub log_domain: bool,
    /// How gamma1 is obtained
    #[arg(long, value_enum)]
    pub gamma_mode: Option<GammaModeArg>,
    /// Variance used in the |Var - theta| term
    #[arg(long, value_enum)]
    pub variance_mode: Option<VarianceModeArg>,
    /// Relative tolerance of the radial quadrature (dimensionless)
    #[arg(long)]
    pub quad_tol: Option<f64>,
    /// Monte Carlo samples for gamma1 in monte-carlo mode (count)
    #[arg(long)]
    pub mc_budget: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Random seed (unsigned integer); falls back to the config file, then RGG_SEED, then 0
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Independent replicates of the edge count (count)
    #[arg(long)]
    pub replicates: Option<u64>,
    /// Largest accepted expected point count per replicate (points)
    #[arg(long)]
    pub point_budget: Option<f64>,
    /// Worker threads, 0 for all cores (count); results do not depend on it
    #[arg(long)]
    pub workers: Option<usize>,
    /// Bootstrap resamples for the TV interval (count)
    #[arg(long)]
    pub bootstrap_resamples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BoundsCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub bound: BoundArgs,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args)]
pub struct SimulateCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub bound: BoundArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub sim: SimArgs,
    /// JSONL file the record is appended to (path)
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub bound: BoundArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Strictly decreasing connection radii, comma separated (lengths)
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// CSV output file (path); standard output when absent
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSONL file every record and skip is appended to (path)
    #[arg(long)]
    pub jsonl: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyCmd {
    #[command(flatten)]
    pub seed: SeedArg,
    /// Poisson samples per moment check (count)
    #[arg(long)]
    pub replicates: Option<u64>,
    /// Flat JSON file with default values for any flag (snake_case keys)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveCmd {
    #[command(flatten)]
    pub model: ModelArgs,
}

/// Values read from `--config`; keys are the long flag names in snake_case.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub d: Option<usize>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub log_lambda: Option<f64>,
    pub theta: Option<f64>,
    pub solve_lambda: Option<bool>,
    pub log_domain: Option<bool>,
    pub gamma_mode: Option<GammaModeArg>,
    pub variance_mode: Option<VarianceModeArg>,
    pub quad_tol: Option<f64>,
    pub mc_budget: Option<u64>,
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub point_budget: Option<f64>,
    pub workers: Option<usize>,
    pub bootstrap_resamples: Option<usize>,
    pub deltas: Option<Vec<f64>>,
    pub output: Option<PathBuf>,
    pub jsonl: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                serde_json::from_str(&text).map_err(|e| Error::Parse {
                    line: e.line(),
                    reason: e.to_string(),
                })
            }
        }
    }
}

const DEFAULT_REPLICATES: u64 = 10_000;
pub const SEED_ENV: &str = "RGG_SEED";
const DEFAULT_VERIFY_REPLICATES: u64 = 1_000_000;

/// Model parameters and the θ the bounds are assembled for.
fn resolve_model(m: &ModelArgs, cfg: &ConfigFile) -> Result<(ModelParams, Option<f64>)> {
    let d = m.d.or(cfg.d).ok_or_else(|| invalid("d", "required"))?;
    let delta = m.delta.or(cfg.delta).ok_or_else(|| invalid("delta", "required"))?;
    let theta = m.theta.or(cfg.theta);
    let solve = m.solve_lambda || cfg.solve_lambda.unwrap_or(false);
    let lambda = m.lambda.or(cfg.lambda);
    let log_lambda = m.log_lambda.or(cfg.log_lambda);
    if solve {
        if lambda.is_some() || log_lambda.is_some() {
            return Err(invalid("lambda", "cannot be combined with solve_lambda"));
        }
        let theta = theta.ok_or_else(|| invalid("theta", "required with solve_lambda"))?;
        return Ok((calibrated_params(d, delta, theta)?, Some(theta)));
    }
    let params = match (lambda, log_lambda) {
        (Some(_), Some(_)) => return Err(invalid("lambda", "give either lambda or log_lambda, not both")),
        (Some(l), None) => ModelParams::new(d, delta, l)?,
        (None, Some(ln)) => ModelParams::from_ln_lambda(d, delta, ln)?,
        (None, None) => return Err(invalid("lambda", "one of lambda, log_lambda or solve_lambda is required")),
    };
    let params = match theta {
        Some(t) => params.with_theta(t)?,
        None => params,
    };
    Ok((params, theta))
}

fn resolve_seed(flag: &SeedArg, cfg: &ConfigFile) -> Result<u64> {
    if let Some(s) = flag.seed.or(cfg.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| invalid("seed", format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn bound_options(b: &BoundArgs, seed: u64, cfg: &ConfigFile) -> Result<BoundOptions> {
    let mut opts = BoundOptions {
        seed,
        ..BoundOptions::default()
    };
    if b.log_domain || cfg.log_domain.unwrap_or(false) {
        opts.domain = DomainChoice::Log;
    }
    opts.gamma1_mode = match b.gamma_mode.or(cfg.gamma_mode) {
        Some(GammaModeArg::MonteCarlo) => GammaMode::MonteCarlo,
        Some(GammaModeArg::PaperDominating) | None => GammaMode::PaperDominating,
    };
    opts.variance_mode = match b.variance_mode.or(cfg.variance_mode) {
        Some(VarianceModeArg::BracketWorst) => VarianceMode::BracketWorst,
        Some(VarianceModeArg::Quadrature) | None => VarianceMode::Quadrature,
    };
    if let Some(tol) = b.quad_tol.or(cfg.quad_tol) {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(invalid("quad_tol", format!("must lie in (0, 1), got {tol}")));
        }
        opts.tolerance = Tolerance::relative(tol);
    }
    if let Some(n) = b.mc_budget.or(cfg.mc_budget) {
        if n == 0 {
            return Err(invalid("mc_budget", "must be positive"));
        }
        opts.mc_budget = n;
    }
    Ok(opts)
}

fn run_options(s: &SimArgs, bounds: BoundOptions, cfg: &ConfigFile) -> Result<RunOptions> {
    let mut opts = RunOptions {
        bounds,
        ..RunOptions::default()
    };
    opts.workers = s.workers.or(cfg.workers).unwrap_or(0);
    let budget = s.point_budget.or(cfg.point_budget).unwrap_or(DEFAULT_POINT_BUDGET);
    if !(budget > 0.0) {
        return Err(invalid("point_budget", "must be positive"));
    }
    opts.point_budget = budget;
    if let Some(b) = s.bootstrap_resamples.or(cfg.bootstrap_resamples) {
        if b == 0 {
            return Err(invalid("bootstrap_resamples", "must be positive"));
        }
        opts.bootstrap_resamples = b;
    }
    Ok(opts)
}

fn replicates(s: &SimArgs, cfg: &ConfigFile) -> Result<u64> {
    match s.replicates.or(cfg.replicates).unwrap_or(DEFAULT_REPLICATES) {
        0 => Err(invalid("replicates", "must be positive")),
        n => Ok(n),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Io(e.to_string()))
}

/// Output of a command: text for stdout and the exit code.
pub struct Outcome {
    pub stdout: String,
    pub code: u8,
}

fn ok(stdout: String) -> Outcome {
    Outcome { stdout, code: EXIT_OK }
}

pub fn cmd_bounds(c: &BoundsCmd) -> Result<Outcome> {
    let cfg = ConfigFile::load(c.model.config.as_deref())?;
    let (params, theta) = resolve_model(&c.model, &cfg)?;
    let seed = resolve_seed(&c.seed, &cfg)?;
    let opts = bound_options(&c.bound, seed, &cfg)?;
    let theta = match theta {
        Some(t) => t,
        None => {
            let mean = mean_edges(&params);
            if !(mean > 0.0 && mean.is_finite()) {
                return Err(invalid("theta", "the model mean is not a positive finite number; pass --theta"));
            }
            mean
        }
    };
    let report = BoundEngine::new(&params, opts).tv_bound(theta)?;
    Ok(ok(to_json(&report)?))
}

pub fn cmd_simulate(c: &SimulateCmd) -> Result<Outcome> {
    let cfg = ConfigFile::load(c.model.config.as_deref())?;
    let (params, _) = resolve_model(&c.model, &cfg)?;
    let seed = resolve_seed(&c.seed, &cfg)?;
    let opts = run_options(&c.sim, bound_options(&c.bound, seed, &cfg)?, &cfg)?;
    let record = simulate(&params, replicates(&c.sim, &cfg)?, seed, &opts)?;
    if let Some(path) = c.output.as_ref().or(cfg.output.as_ref()) {
        JsonlSink::open(path)?.append(&record)?;
    }
    Ok(ok(to_json(&record)?))
}

pub fn cmd_sweep(c: &SweepCmd) -> Result<Outcome> {
    let cfg = ConfigFile::load(c.model.config.as_deref())?;
    let d = c.model.d.or(cfg.d).ok_or_else(|| invalid("d", "required"))?;
    let theta = c.model.theta.or(cfg.theta).ok_or_else(|| invalid("theta", "required"))?;
    let deltas = c
        .deltas
        .clone()
        .or_else(|| cfg.deltas.clone())
        .ok_or_else(|| invalid("deltas", "required"))?;
    if c.model.lambda.or(cfg.lambda).is_some() || c.model.log_lambda.or(cfg.log_lambda).is_some() {
        return Err(invalid("lambda", "a sweep solves lambda for each delta"));
    }
    let seed = resolve_seed(&c.seed, &cfg)?;
    let opts = run_options(&c.sim, bound_options(&c.bound, seed, &cfg)?, &cfg)?;
    let mut sink = match c.jsonl.as_ref().or(cfg.jsonl.as_ref()) {
        Some(p) => Some(JsonlSink::open(p)?),
        None => None,
    };
    let outcome = convergence_sweep(&deltas, d, theta, replicates(&c.sim, &cfg)?, seed, &opts, sink.as_mut())?;
    for s in &outcome.skipped {
        eprintln!("{}", to_json(s)?);
    }
    let mut csv = Vec::new();
    write_csv(&outcome.records, &mut csv)?;
    let csv = String::from_utf8(csv).map_err(|e| Error::Io(e.to_string()))?;
    let code = if outcome.records.is_empty() { EXIT_INFEASIBLE } else { EXIT_OK };
    match c.output.as_ref().or(cfg.output.as_ref()) {
        Some(path) => {
            std::fs::write(path, csv)?;
            Ok(Outcome {
                stdout: String::new(),
                code,
            })
        }
        None => Ok(Outcome { stdout: csv, code }),
    }
}

/// One line of the verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Moment identities, the two-sided bound on `A`, and consistency of the
/// quadrature variance with its closed-form bracket.
pub fn verify_suite(seed: u64, replicates: u64) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    for (i, &a) in [0.1, 0.5, 1.0, 2.0, 5.0].iter().enumerate() {
        let r = moment_check(a, replicates, seed.wrapping_add(i as u64))?;
        let worst = r
            .entries
            .iter()
            .map(|e| (e.empirical - e.expected).abs() / e.std_error.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        lines.push(CheckLine {
            name: format!("moments a={a}"),
            pass: r.pass,
            detail: format!("max |z| = {worst:.3}"),
        });
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0usize;
    for _ in 0..1000 {
        let d = rng.gen_range(1..=8usize);
        let delta: f64 = rng.gen_range(0.01..1.5);
        let ln_lambda = rng.gen_range(-3.0..8.0);
        let params = ModelParams::from_ln_lambda(d, delta, ln_lambda)?;
        let r: f64 = rng.gen_range(0.0..1.0 + delta);
        let a = local_mean_a_log(r, &params).value();
        let a0 = params.ln_interior_a().exp();
        let lower = if r <= 1.0 - 0.5 * delta { a0 } else { 0.0 };
        let upper = if r <= 1.0 + 0.5 * delta { a0 } else { 0.0 };
        let slack = 1e-12 * a0;
        if !(a >= lower - slack && a <= upper + slack) {
            failures += 1;
        }
    }
    lines.push(CheckLine {
        name: "local mean bracket".into(),
        pass: failures == 0,
        detail: format!("{failures} of 1000 outside"),
    });

    let mut failures = 0usize;
    for _ in 0..50 {
        let d = rng.gen_range(1..=8usize);
        let delta: f64 = rng.gen_range(0.02..1.0);
        let params = calibrated_params(d, delta, rng.gen_range(0.2..5.0))?;
        let engine = BoundEngine::new(&params, BoundOptions::default());
        let v = engine.variance_quadrature().value();
        let (lo, hi) = variance_bracket_log(&params);
        let m = engine.mean().value();
        let mq = engine.mean_quadrature().value();
        let tol = 1e-12 * hi.value();
        if !(v >= lo.value() - tol && v <= hi.value() + tol) || (m - mq).abs() > 1e-8 * m {
            failures += 1;
        }
    }
    lines.push(CheckLine {
        name: "variance consistency".into(),
        pass: failures == 0,
        detail: format!("{failures} of 50 inconsistent"),
    });
    Ok(lines)
}

pub fn cmd_verify(c: &VerifyCmd) -> Result<Outcome> {
    let cfg = ConfigFile::load(c.config.as_deref())?;
    let seed = resolve_seed(&c.seed, &cfg)?;
    let n = c.replicates.or(cfg.replicates).unwrap_or(DEFAULT_VERIFY_REPLICATES);
    let lines = verify_suite(seed, n)?;
    let mut out = String::new();
    for l in &lines {
        out.push_str(&format!("{} {}: {}\n", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail));
    }
    let passed = lines.iter().filter(|l| l.pass).count();
    out.push_str(&format!("{passed}/{} checks passed\n", lines.len()));
    Ok(Outcome {
        stdout: out,
        code: if passed == lines.len() { EXIT_OK } else { EXIT_SUITE_FAILURE },
    })
}

#[derive(Debug, Serialize)]
struct SolveOutput {
    d: usize,
    delta: f64,
    theta: f64,
    lambda: f64,
    log_lambda: f64,
}

pub fn cmd_solve_lambda(c: &SolveCmd) -> Result<Outcome> {
    let cfg = ConfigFile::load(c.model.config.as_deref())?;
    let d = c.model.d.or(cfg.d).ok_or_else(|| invalid("d", "required"))?;
    let delta = c.model.delta.or(cfg.delta).ok_or_else(|| invalid("delta", "required"))?;
    let theta = c.model.theta.or(cfg.theta).ok_or_else(|| invalid("theta", "required"))?;
    let l = solve_lambda(Dimension::new(d)?, delta, theta)?;
    Ok(ok(to_json(&SolveOutput {
        d,
        delta,
        theta,
        lambda: l.value(),
        log_lambda: l.ln_or_neg_inf(),
    })?))
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible { .. } => EXIT_INFEASIBLE,
        Error::InvalidParameter { .. } | Error::DimensionMismatch { .. } | Error::Parse { .. } => EXIT_USAGE,
        Error::EmptyDistribution | Error::Io(_) => EXIT_SUITE_FAILURE,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter { .. } => "invalid_parameter",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::Infeasible { .. } => "infeasible",
        Error::EmptyDistribution => "empty_distribution",
        Error::Parse { .. } => "parse",
        Error::Io(_) => "io",
    }
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Bounds(c) => cmd_bounds(c),
        Command::Simulate(c) => cmd_simulate(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Verify(c) => cmd_verify(c),
        Command::SolveLambda(c) => cmd_solve_lambda(c),
    }
}

/// Parses `args`, runs the command and writes its output.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::from(EXIT_OK);
            }
            eprintln!("{}", error_line("usage", e.to_string().trim()));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(outcome.stdout.as_bytes());
            if !outcome.stdout.is_empty() && !outcome.stdout.ends_with('\n') {
                let _ = stdout.write_all(b"\n");
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("{}", error_line(error_kind(&e), &e.to_string()));
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("rgg").chain(args.iter().copied())).unwrap()
    }

    fn bounds_json(args: &[&str]) -> serde_json::Value {
        let cli = parse(args);
        let out = execute(&cli).unwrap();
        assert_eq!(out.code, EXIT_OK);
        serde_json::from_str(&out.stdout).unwrap()
    }

    #[test]
    fn solve_lambda_forward_check() {
        let v = bounds_json(&["bounds", "-d", "2", "--delta", "0.05", "--theta", "1", "--solve-lambda"]);
        assert!((v["mean"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_intensity_gammas_vanish() {
        let v = bounds_json(&["bounds", "-d", "2", "--delta", "0.1", "--lambda", "0", "--theta", "1"]);
        for key in ["gamma1", "gamma2", "gamma3p", "gamma3n"] {
            assert_eq!(v[key].as_f64().unwrap(), 0.0, "{key}");
        }
    }

    #[test]
    fn high_dimension_log_domain() {
        let v = bounds_json(&["bounds", "-d", "100", "--delta", "0.01", "--theta", "1", "--solve-lambda", "--log-domain"]);
        assert!(v["tv_bound"].as_f64().unwrap().is_finite());
        assert_eq!(v["log_domain"], serde_json::Value::Bool(true));
    }

    #[test]
    fn validation_errors() {
        for args in [
            vec!["bounds", "-d", "0", "--delta", "0.1", "--lambda", "1"],
            vec!["bounds", "-d", "2", "--delta", "-0.1", "--lambda", "1"],
            vec!["bounds", "-d", "2", "--delta", "0.1"],
            vec!["bounds", "-d", "2", "--delta", "0.1", "--lambda", "1", "--solve-lambda", "--theta", "1"],
            vec!["bounds", "-d", "2", "--delta", "0.1", "--lambda", "0"],
        ] {
            let err = execute(&parse(&args)).err().unwrap();
            assert_eq!(exit_code(&err), EXIT_USAGE, "{args:?}");
        }
        assert!(Cli::try_parse_from(["rgg", "bounds", "--bogus"]).is_err());
    }

    #[test]
    fn config_file_defaults_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"d": 2, "delta": 0.05, "theta": 1.0, "solve_lambda": true}"#).unwrap();
        let p = path.to_str().unwrap();
        let v = bounds_json(&["bounds", "--config", p]);
        assert!((v["mean"].as_f64().unwrap() - 1.0).abs() < 1e-10);
        let v = bounds_json(&["bounds", "--config", p, "--theta", "2"]);
        assert!((v["mean"].as_f64().unwrap() - 2.0).abs() < 1e-10);
        std::fs::write(&path, r#"{"d": 2, "unknown_key": 1}"#).unwrap();
        let err = execute(&parse(&["bounds", "--config", p])).err().unwrap();
        assert_eq!(exit_code(&err), EXIT_USAGE);
    }

    #[test]
    fn solve_lambda_command() {
        let out = execute(&parse(&["solve-lambda", "-d", "2", "--delta", "0.01", "--theta", "2"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert!((v["lambda"].as_f64().unwrap() - 200.0 / std::f64::consts::PI).abs() < 1e-9);
        assert!((v["log_lambda"].as_f64().unwrap() - (200.0 / std::f64::consts::PI).ln()).abs() < 1e-12);
    }

    #[test]
    fn infeasible_simulation_exit_code() {
        let cli = parse(&[
            "simulate", "-d", "2", "--delta", "0.001", "--theta", "1", "--solve-lambda", "--point-budget", "10",
        ]);
        let err = execute(&cli).err().unwrap();
        assert_eq!(exit_code(&err), EXIT_INFEASIBLE);
    }
}
