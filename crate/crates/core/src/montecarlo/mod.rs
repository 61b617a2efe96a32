//! Seeded Monte Carlo experiments and their reports.
//!
//! Every `run_*` function is a pure function of its [`ExperimentConfig`]:
//! trial `t` draws its matrix, signal and noise from substreams keyed by
//! `(seed, t)`, trials run in parallel, and results are aggregated in trial
//! order.

mod runs;

pub use runs::{run_bounds, run_concentration, run_false_typicality, run_miss_probability, run_mse};

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::alpha_threshold;
use crate::ensembles::EnsembleKind;
use crate::error::{Error, Result};
use crate::estimators::{SparseSignal, DEFAULT_BUDGET};
use crate::projections::SupportSet;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalMode {
    /// Every nonzero is `±μ`.
    ConstantMagnitude,
    /// Magnitudes uniform on `[μ, max]`, random sign.
    UniformMagnitude { max: f64 },
}

impl fmt::Display for SignalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalMode::ConstantMagnitude => f.write_str("constant"),
            SignalMode::UniformMagnitude { max } => write!(f, "uniform:{max}"),
        }
    }
}

impl FromStr for SignalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "constant" {
            return Ok(SignalMode::ConstantMagnitude);
        }
        if let Some(max) = s.strip_prefix("uniform:") {
            let max: f64 = max.parse().map_err(|_| Error::InvalidParameter(format!("bad uniform maximum '{max}'")))?;
            return Ok(SignalMode::UniformMagnitude { max });
        }
        Err(Error::InvalidParameter(format!("unknown signal mode '{s}' (expected constant or uniform:<max>)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixMode {
    FixedAcrossTrials,
    ResampledPerTrial,
}

impl fmt::Display for MatrixMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatrixMode::FixedAcrossTrials => "fixed",
            MatrixMode::ResampledPerTrial => "resampled",
        })
    }
}

impl FromStr for MatrixMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(MatrixMode::FixedAcrossTrials),
            "resampled" => Ok(MatrixMode::ResampledPerTrial),
            _ => Err(Error::InvalidParameter(format!("unknown matrix mode '{s}' (expected fixed or resampled)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportMode {
    FixedFirstK,
    UniformRandom,
}

impl fmt::Display for SupportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SupportMode::FixedFirstK => "first",
            SupportMode::UniformRandom => "random",
        })
    }
}

impl FromStr for SupportMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(SupportMode::FixedFirstK),
            "random" => Ok(SupportMode::UniformRandom),
            _ => Err(Error::InvalidParameter(format!("unknown support mode '{s}' (expected first or random)"))),
        }
    }
}

/// Parameters shared by all experiments. Under `FixedAcrossTrials` the signal
/// is drawn once together with the matrix; under `ResampledPerTrial` both are
/// redrawn every trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub ensemble: EnsembleKind,
    pub sigma_n_sq: f64,
    /// Absolute typicality thresholds, evaluated on shared draws.
    pub eps: Vec<f64>,
    pub mu: f64,
    pub signal_mode: SignalMode,
    pub trials: usize,
    pub seed: u64,
    pub matrix_mode: MatrixMode,
    pub support_mode: SupportMode,
    /// Largest `C(M,K)` an exhaustive scan may visit.
    pub budget: u128,
    /// Also run the minimum-residual oracle in `run_mse`.
    pub ml_oracle: bool,
    /// Candidate support for `run_false_typicality`; `None` swaps the last
    /// index of `τ` for the first index outside it.
    pub xi: Option<SupportSet>,
    /// `N` values for `run_concentration` and `run_bounds`; empty means `[n]`.
    pub n_grid: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 64,
            m: 16,
            k: 4,
            ensemble: EnsembleKind::GaussianUnit,
            sigma_n_sq: 1.0,
            eps: vec![0.1],
            mu: 1.0,
            signal_mode: SignalMode::ConstantMagnitude,
            trials: 1000,
            seed: 0,
            matrix_mode: MatrixMode::FixedAcrossTrials,
            support_mode: SupportMode::FixedFirstK,
            budget: DEFAULT_BUDGET,
            ml_oracle: true,
            xi: None,
            n_grid: Vec::new(),
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

impl ExperimentConfig {
    /// Checks every field; returns warnings that do not prevent a run.
    pub fn validate(&self) -> Result<Vec<String>> {
        let (n, m, k) = (self.n, self.m, self.k);
        if k == 0 || k >= n {
            return Err(invalid(format!("need 1 <= K < N (K={k}, N={n})")));
        }
        if k > m {
            return Err(invalid(format!("need K <= M (K={k}, M={m})")));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1".into()));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(invalid(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.sigma_n_sq.is_finite() && self.sigma_n_sq >= 0.0) {
            return Err(invalid(format!("sigma2 must be >= 0, got {}", self.sigma_n_sq)));
        }
        if self.eps.is_empty() {
            return Err(invalid("at least one eps value is required".into()));
        }
        if let Some(e) = self.eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(invalid(format!("eps values must be > 0, got {e}")));
        }
        if let SignalMode::UniformMagnitude { max } = self.signal_mode {
            if !(max.is_finite() && max >= self.mu) {
                return Err(invalid(format!("uniform maximum {max} must be >= mu={}", self.mu)));
            }
        }
        if self.budget == 0 {
            return Err(invalid("budget must be positive".into()));
        }
        if let Some(xi) = &self.xi {
            if xi.k() != k {
                return Err(invalid(format!("xi has {} indices, expected K={k}", xi.k())));
            }
            if xi.indices().iter().any(|&i| i >= m) {
                return Err(invalid(format!("xi {xi} has an index beyond M={m}")));
            }
        }
        if let Some(&bad) = self.n_grid.iter().find(|&&g| g <= k) {
            return Err(invalid(format!("grid value N={bad} must exceed K={k}")));
        }
        let mut warnings = Vec::new();
        let beta = self.beta();
        match alpha_threshold(beta) {
            Ok(thr) if self.alpha() >= thr => {
                warnings.push(format!("alpha={} is not below the threshold {thr} for beta={beta}", self.alpha()))
            }
            Ok(_) => {}
            Err(_) => warnings.push(format!("no alpha threshold is defined for beta={beta}")),
        }
        Ok(warnings)
    }

    pub fn alpha(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn beta(&self) -> f64 {
        self.m as f64 / self.k as f64
    }

    pub fn grid(&self) -> Vec<usize> {
        if self.n_grid.is_empty() {
            vec![self.n]
        } else {
            self.n_grid.clone()
        }
    }

    /// Fully resolved `key=value` pairs using the command-line flag names,
    /// with floats in shortest round-trip form.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let join = |v: Vec<String>| v.join(",");
        let mut out = vec![
            ("N", self.n.to_string()),
            ("M", self.m.to_string()),
            ("K", self.k.to_string()),
            ("ensemble", self.ensemble.to_string()),
            ("sigma2", self.sigma_n_sq.to_string()),
            ("eps", join(self.eps.iter().map(f64::to_string).collect())),
            ("mu", self.mu.to_string()),
            ("signal", self.signal_mode.to_string()),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("matrix", self.matrix_mode.to_string()),
            ("support", self.support_mode.to_string()),
            ("budget", self.budget.to_string()),
            ("ml", self.ml_oracle.to_string()),
        ];
        if let Some(xi) = &self.xi {
            out.push(("xi", join(xi.one_based().iter().map(usize::to_string).collect())));
        }
        if !self.n_grid.is_empty() {
            out.push(("n-grid", join(self.n_grid.iter().map(usize::to_string).collect())));
        }
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

/// Draws a `K`-sparse length-`M` signal with minimum magnitude `μ`.
pub fn sample_sparse_signal<T: Real>(
    m: usize,
    k: usize,
    mu: f64,
    mode: SignalMode,
    support_mode: SupportMode,
    seed: u64,
) -> Result<SparseSignal<T>> {
    if k == 0 || k > m {
        return Err(invalid(format!("need 1 <= K <= M (K={k}, M={m})")));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(invalid(format!("mu must be > 0, got {mu}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support: Vec<usize> = match support_mode {
        SupportMode::FixedFirstK => (0..k).collect(),
        SupportMode::UniformRandom => index::sample(&mut rng, m, k).into_vec(),
    };
    support.sort_unstable();
    let mut values = vec![T::zero(); m];
    for &i in &support {
        let mag = match mode {
            SignalMode::ConstantMagnitude => mu,
            SignalMode::UniformMagnitude { max } => {
                if !(max >= mu) {
                    return Err(invalid(format!("uniform maximum {max} must be >= mu={mu}")));
                }
                rng.random_range(mu..=max)
            }
        };
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        values[i] = T::of(sign * mag);
    }
    SparseSignal::from_values(values)
}

/// Sizes attached to every report row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowDims {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub sigma_n_sq: f64,
    pub trials: usize,
    pub seed: u64,
}

impl RowDims {
    pub fn alpha(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn beta(&self) -> f64 {
        self.m as f64 / self.k as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: String,
    pub value: f64,
    pub std_err: Option<f64>,
    pub bound: Option<f64>,
    pub bound_name: Option<String>,
    pub eps: Option<f64>,
    pub dims: RowDims,
}

impl MetricRow {
    pub fn new(metric: impl Into<String>, value: f64, dims: RowDims) -> Self {
        Self { metric: metric.into(), value, std_err: None, bound: None, bound_name: None, eps: None, dims }
    }

    pub fn se(mut self, se: f64) -> Self {
        self.std_err = Some(se);
        self
    }

    pub fn bound(mut self, name: impl Into<String>, value: f64) -> Self {
        self.bound = Some(value);
        self.bound_name = Some(name.into());
        self
    }

    pub fn eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub command: String,
    /// Resolved configuration, replayable through the command line.
    pub config: Vec<(String, String)>,
    pub rows: Vec<MetricRow>,
    pub warnings: Vec<String>,
    /// Wall-clock time; not part of the serialised output.
    pub elapsed: Duration,
}

impl ExperimentReport {
    /// First row named `metric` with the given threshold.
    pub fn find(&self, metric: &str, eps: Option<f64>) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.metric == metric && r.eps == eps)
    }

    pub fn rows_named(&self, metric: &str) -> Vec<&MetricRow> {
        self.rows.iter().filter(|r| r.metric == metric).collect()
    }
}

/// `√(p(1−p)/t)`.
pub fn proportion_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Sample moments of a sequence, accumulated in order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    /// Standard error of the mean.
    pub se_mean: f64,
    /// Large-sample standard error of the variance, `√((m₄ − m₂²)/t)`.
    pub se_var: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        let t = xs.len();
        if t == 0 {
            return Self { count: 0, mean: f64::NAN, var: f64::NAN, se_mean: f64::NAN, se_var: f64::NAN };
        }
        let tf = t as f64;
        let mean = xs.iter().sum::<f64>() / tf;
        let (m2, m4) = xs.iter().fold((0.0, 0.0), |(a, b), &x| {
            let d = x - mean;
            (a + d * d, b + d * d * d * d)
        });
        let var = if t > 1 { m2 / (tf - 1.0) } else { 0.0 };
        let (c2, c4) = (m2 / tf, m4 / tf);
        Self { count: t, mean, var, se_mean: (var / tf).sqrt(), se_var: ((c4 - c2 * c2).max(0.0) / tf).sqrt() }
    }
}

#[cfg(test)]
mod tests;
