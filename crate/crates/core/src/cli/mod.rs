//! Command-line front end.
//!
//! ```text
//! jtcs <miss-prob|false-alarm|mse|concentration|bounds> [flags] [--config FILE]
//! ```
//!
//! A config file holds `key=value` lines whose keys are flag names without the
//! leading dashes. Its values are applied first, so flags on the command line
//! override them. `JTCS_THREADS` sets the worker count.

mod output;

pub use output::{render_config, render_csv, render_json, write_report, OutputFormat, CSV_HEADER};

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::ensembles::EnsembleKind;
use crate::error::Error;
use crate::estimators::DEFAULT_BUDGET;
use crate::montecarlo::{
    run_bounds, run_concentration, run_false_typicality, run_miss_probability, run_mse, ExperimentConfig,
    ExperimentReport, MatrixMode, SignalMode, SupportMode,
};
use crate::projections::SupportSet;
use crate::scalar::Real;

pub const SUBCOMMANDS: [&str; 5] = ["miss-prob", "false-alarm", "mse", "concentration", "bounds"];

/// Exit status for argument and configuration errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for errors raised while running an experiment.
pub const EXIT_RUN: i32 = 3;
/// Exit status for output failures.
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "jtcs", version, about = "Joint-typicality sparse estimation experiments")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Probability that the true support fails the typicality test.
    MissProb(RunArgs),
    /// Probability that a wrong support passes the typicality test.
    FalseAlarm(RunArgs),
    /// MSE of the typicality estimator against least squares and the CRB.
    Mse(RunArgs),
    /// Concentration violation rates and Gram statistics per ensemble.
    Concentration(RunArgs),
    /// Closed-form bound table.
    Bounds(RunArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::MissProb(a) => ("miss-prob", a),
            Command::FalseAlarm(a) => ("false-alarm", a),
            Command::Mse(a) => ("mse", a),
            Command::Concentration(a) => ("concentration", a),
            Command::Bounds(a) => ("bounds", a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long = "N", default_value_t = 64)]
    n: usize,
    #[arg(long = "M", default_value_t = 16)]
    m: usize,
    #[arg(long = "K", default_value_t = 4)]
    k: usize,
    #[arg(long, default_value = "gaussian")]
    ensemble: EnsembleKind,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Absolute thresholds, comma separated.
    #[arg(long, value_parser = parse_list::<f64>)]
    eps: Option<List<f64>>,
    /// Thresholds as fractions of sigma2; replaces --eps when given.
    #[arg(long = "eps-rel", value_parser = parse_list::<f64>)]
    eps_rel: Option<List<f64>>,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// `constant` or `uniform:<max>`.
    #[arg(long, default_value = "constant")]
    signal: SignalMode,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `fixed` or `resampled`.
    #[arg(long, default_value = "fixed")]
    matrix: MatrixMode,
    /// `first` or `random`.
    #[arg(long, default_value = "first")]
    support: SupportMode,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    /// Run the minimum-residual oracle alongside the estimator.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    ml: bool,
    /// Wrong support for false-alarm, 1-based and comma separated.
    #[arg(long, value_parser = parse_list::<usize>)]
    xi: Option<List<usize>>,
    /// N values for concentration and bounds.
    #[arg(long = "n-grid", value_parser = parse_list::<usize>)]
    n_grid: Option<List<usize>>,
    #[arg(long, value_enum, default_value = "f64")]
    precision: Precision,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// `key=value` file applied before the command-line flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn to_config(&self) -> Result<ExperimentConfig, Error> {
        let eps = match (&self.eps_rel, &self.eps) {
            (Some(List(rel)), _) => rel.iter().map(|r| r * self.sigma2).collect(),
            (None, Some(List(abs))) => abs.clone(),
            (None, None) => vec![0.1 * self.sigma2],
        };
        let xi = self.xi.as_ref().map(|List(xi)| SupportSet::from_one_based(xi, self.m)).transpose()?;
        let cfg = ExperimentConfig {
            n: self.n,
            m: self.m,
            k: self.k,
            ensemble: self.ensemble,
            sigma_n_sq: self.sigma2,
            eps,
            mu: self.mu,
            signal_mode: self.signal,
            trials: self.trials,
            seed: self.seed,
            matrix_mode: self.matrix,
            support_mode: self.support,
            budget: self.budget,
            ml_oracle: self.ml,
            xi,
            n_grid: self.n_grid.clone().map(|List(v)| v).unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Comma-separated list held as one value, so a repeated flag replaces the
/// whole list instead of extending it.
#[derive(Debug, Clone, PartialEq)]
struct List<T>(Vec<T>);

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<List<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',').map(|p| p.trim().parse::<T>().map_err(|e| format!("'{p}': {e}"))).collect::<Result<_, _>>().map(List)
}

/// A diagnostic plus the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub status: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { status: EXIT_USAGE, message: message.into() }
    }
}

fn config_path(argv: &[String]) -> Result<Option<PathBuf>, Failure> {
    for (i, a) in argv.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            return Ok(Some(PathBuf::from(p)));
        }
        if a == "--config" {
            return match argv.get(i + 1) {
                Some(p) => Ok(Some(PathBuf::from(p))),
                None => Err(Failure::usage("--config needs a file path")),
            };
        }
    }
    Ok(None)
}

/// Turns a `key=value` file into flag tokens. A `command` key must match the
/// subcommand being run.
fn config_tokens(path: &PathBuf, command: &str) -> Result<Vec<String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config file {}: {e}", path.display())))?;
    let mut tokens = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Failure::usage(format!("{}:{}: expected key=value, got '{line}'", path.display(), lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "command" if value != command => {
                return Err(Failure::usage(format!("config file is for '{value}' but the subcommand is '{command}'")))
            }
            "command" => {}
            "config" => return Err(Failure::usage("config files cannot include other config files")),
            _ => {
                tokens.push(format!("--{key}"));
                tokens.push(value.to_string());
            }
        }
    }
    Ok(tokens)
}

fn init_threads() {
    if let Some(n) = std::env::var("JTCS_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // A second initialisation in the same process is harmless to ignore.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn dispatch<T: Real>(command: &str, cfg: &ExperimentConfig) -> crate::error::Result<ExperimentReport> {
    match command {
        "miss-prob" => run_miss_probability::<T>(cfg),
        "false-alarm" => run_false_typicality::<T>(cfg),
        "mse" => run_mse::<T>(cfg),
        "concentration" => run_concentration::<T>(cfg),
        _ => run_bounds(cfg),
    }
}

/// Parses `argv` (program name first), runs the experiment and writes the
/// report. Returns the report on success.
pub fn run(argv: &[String]) -> Result<ExperimentReport, Failure> {
    let Some(command) = argv.get(1) else {
        return Err(Failure::usage(format!("missing subcommand; valid subcommands: {}", SUBCOMMANDS.join(", "))));
    };
    let is_flag = command.starts_with('-');
    if !is_flag && !SUBCOMMANDS.contains(&command.as_str()) && command != "help" {
        return Err(Failure::usage(format!(
            "unknown subcommand '{command}'; valid subcommands: {}",
            SUBCOMMANDS.join(", ")
        )));
    }
    let mut full: Vec<String> = argv[..2].to_vec();
    if !is_flag {
        if let Some(path) = config_path(&argv[2..])? {
            full.extend(config_tokens(&path, command)?);
        }
    }
    full.extend_from_slice(&argv[2..]);
    let cli = Cli::try_parse_from(&full).map_err(|e| {
        let status = if e.use_stderr() { EXIT_USAGE } else { 0 };
        Failure { status, message: e.render().to_string() }
    })?;
    let (command, args) = cli.command.parts();
    let cfg = args.to_config().map_err(|e| Failure::usage(format!("invalid configuration: {e}")))?;
    init_threads();
    let mut report = match args.precision {
        Precision::F64 => dispatch::<f64>(command, &cfg),
        Precision::F32 => dispatch::<f32>(command, &cfg),
    }
    .map_err(|e| Failure { status: EXIT_RUN, message: format!("{command} failed: {e}") })?;
    report.config.push(("precision".into(), format!("{:?}", args.precision).to_lowercase()));
    report.config.push(("format".into(), args.format.name().into()));
    write_report(&report, args.format, args.out.as_deref())
        .map_err(|e| Failure { status: EXIT_IO, message: format!("cannot write report: {e}") })?;
    Ok(report)
}

/// Entry point used by the binary: returns the process exit status.
pub fn parse_and_run(argv: &[String]) -> i32 {
    match run(argv) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("{} finished in {:.3} s", report.command, report.elapsed.as_secs_f64());
            0
        }
        Err(f) if f.status == 0 => {
            print!("{}", f.message);
            0
        }
        Err(f) => {
            eprintln!("error: {}", f.message.trim_start_matches("error: ").trim_end());
            f.status
        }
    }
}
