use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{
    proportion_se, sample_sparse_signal, ExperimentConfig, ExperimentReport, MatrixMode, MetricRow, Moments, RowDims,
};
use crate::bounds::{
    alpha_threshold, chernoff_miss_terms, crb_s, f_z, false_typicality_bound, mse_upper_bound_with, nu_star,
    resolve_nu_star_scale, BoundInputs, FalseTypicalityVariant, MseDenominator,
};
use crate::ensembles::{
    column_gram_stats, concentration_violation_rate, sample_matrix, EnsembleKind, MeasurementMatrix,
};
use crate::error::{Error, Result};
use crate::estimators::{embed, estimate_from_tally, scan_supports, slse, Outcome, ScanOptions, SparseSignal};
use crate::projections::{gamma_sq, ColumnSpan, SupportSet};
use crate::rng::{derive_seed, substream, Stream};
use crate::scalar::Real;
use crate::typicality::statistic_from_residual;

struct Instance<T> {
    a: MeasurementMatrix<T>,
    s: SparseSignal<T>,
}

fn make_instance<T: Real>(cfg: &ExperimentConfig, index: u64) -> Result<Instance<T>> {
    let a = sample_matrix(cfg.ensemble, cfg.n, cfg.m, derive_seed(cfg.seed, index, Stream::Matrix))?;
    let s = sample_sparse_signal(
        cfg.m,
        cfg.k,
        cfg.mu,
        cfg.signal_mode,
        cfg.support_mode,
        derive_seed(cfg.seed, index, Stream::Signal),
    )?;
    Ok(Instance { a, s })
}

/// Runs `body` once per trial in parallel and returns the results in trial
/// order. The fixed instance, when there is one, is built once and shared.
fn run_trials<T: Real, R: Send>(
    cfg: &ExperimentConfig,
    body: impl Fn(u64, &Instance<T>) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    let fixed = match cfg.matrix_mode {
        MatrixMode::FixedAcrossTrials => Some(make_instance::<T>(cfg, 0)?),
        MatrixMode::ResampledPerTrial => None,
    };
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| match &fixed {
            Some(inst) => body(t, inst),
            None => body(t, &make_instance(cfg, t)?),
        })
        .collect()
}

fn measure<T: Real>(cfg: &ExperimentConfig, trial: u64, inst: &Instance<T>) -> Vec<T> {
    let mut rng = substream(cfg.seed, trial, Stream::Noise);
    let sigma = T::of(cfg.sigma_n_sq.sqrt());
    inst.a.apply(inst.s.values()).into_iter().map(|v| v + sigma * T::of(rng.sample::<f64, _>(StandardNormal))).collect()
}

fn typical_flags<T: Real>(cfg: &ExperimentConfig, residual: T) -> Vec<bool> {
    let stat = statistic_from_residual(residual, cfg.n, cfg.k, T::of(cfg.sigma_n_sq));
    cfg.eps.iter().map(|&e| stat < T::of(e)).collect()
}

fn dims(cfg: &ExperimentConfig) -> RowDims {
    RowDims { n: cfg.n, m: cfg.m, k: cfg.k, sigma_n_sq: cfg.sigma_n_sq, trials: cfg.trials, seed: cfg.seed }
}

fn start(cfg: &ExperimentConfig, command: &str) -> Result<(ExperimentReport, Instant)> {
    let warnings = cfg.validate()?;
    let report = ExperimentReport {
        command: command.to_string(),
        config: cfg.to_pairs(),
        rows: Vec::new(),
        warnings,
        elapsed: Default::default(),
    };
    Ok((report, Instant::now()))
}

fn fraction(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

/// Empirical `P{τ not typical}` against the Chernoff miss bound, and moments
/// of `φ₁ = ‖Π⊥_τ y‖²`.
pub fn run_miss_probability<T: Real>(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (mut report, clock) = start(cfg, "miss-prob")?;
    let span_fixed = match cfg.matrix_mode {
        MatrixMode::FixedAcrossTrials => {
            let inst = make_instance::<T>(cfg, 0)?;
            Some(ColumnSpan::new(&inst.a, inst.s.support())?)
        }
        MatrixMode::ResampledPerTrial => None,
    };
    let trials = run_trials::<T, _>(cfg, |t, inst| {
        let y = measure(cfg, t, inst);
        let r = match &span_fixed {
            Some(span) => span.residual_sq(&y),
            None => ColumnSpan::new(&inst.a, inst.s.support())?.residual_sq(&y),
        };
        Ok((r.to_f64_lossy(), typical_flags(cfg, r)))
    })?;
    let d = dims(cfg);
    for (j, &e) in cfg.eps.iter().enumerate() {
        let misses = trials.iter().filter(|(_, f)| !f[j]).count();
        let p = fraction(misses, cfg.trials);
        let terms = chernoff_miss_terms(&BoundInputs::new(cfg.n, cfg.k, cfg.m, cfg.sigma_n_sq, e)?);
        let name = if terms.lower_tail_impossible { "chernoff_miss_upper_tail_only" } else { "chernoff_miss" };
        report.rows.push(
            MetricRow::new("miss_probability", p, d).se(proportion_se(p, cfg.trials)).bound(name, terms.total()).eps(e),
        );
    }
    let phi1: Vec<f64> = trials.iter().map(|(r, _)| *r).collect();
    let mo = Moments::of(&phi1);
    let dof = (cfg.n - cfg.k) as f64;
    report.rows.push(MetricRow::new("phi1_mean", mo.mean, d).se(mo.se_mean).bound("chi2_mean", dof * cfg.sigma_n_sq));
    report.rows.push(
        MetricRow::new("phi1_var", mo.var, d)
            .se(mo.se_var)
            .bound("chi2_var", 2.0 * dof * cfg.sigma_n_sq * cfg.sigma_n_sq),
    );
    report.elapsed = clock.elapsed();
    Ok(report)
}

fn candidate(cfg: &ExperimentConfig, tau: &SupportSet) -> Result<SupportSet> {
    let xi = match &cfg.xi {
        Some(xi) => xi.clone(),
        None => tau
            .swap_last(cfg.m)
            .ok_or_else(|| Error::InvalidParameter("no candidate support distinct from tau exists (M = K)".into()))?,
    };
    if &xi == tau {
        return Err(Error::InvalidParameter(format!("xi {xi} equals the true support")));
    }
    Ok(xi)
}

struct FalseTrial {
    phi2: f64,
    gamma_sq: f64,
    off_energy: f64,
    flags: Vec<bool>,
}

/// Empirical `P{ξ typical}` for a wrong support `ξ`, against all three
/// false-typicality bounds, with `φ₂ = ‖Π⊥_ξ y‖²` moments.
pub fn run_false_typicality<T: Real>(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (mut report, clock) = start(cfg, "false-alarm")?;
    let trials = run_trials::<T, _>(cfg, |t, inst| {
        let xi = candidate(cfg, inst.s.support())?;
        let y = measure(cfg, t, inst);
        let r = ColumnSpan::new(&inst.a, &xi)?.residual_sq(&y);
        Ok(FalseTrial {
            phi2: r.to_f64_lossy(),
            gamma_sq: gamma_sq(&inst.a, &xi, &inst.s)?.to_f64_lossy(),
            off_energy: inst.s.energy_outside(&xi).to_f64_lossy(),
            flags: typical_flags(cfg, r),
        })
    })?;
    let d = dims(cfg);
    let (n, dof, s2) = (cfg.n as f64, (cfg.n - cfg.k) as f64, cfg.sigma_n_sq);
    for (j, &e) in cfg.eps.iter().enumerate() {
        let hits = trials.iter().filter(|tr| tr.flags[j]).count();
        let p = fraction(hits, cfg.trials);
        let base = BoundInputs::new(cfg.n, cfg.k, cfg.m, s2, e)?;
        let mut violations = 0usize;
        for variant in FalseTypicalityVariant::ALL {
            // The bound holds conditionally on each instance; average it.
            let mut total = 0.0;
            for tr in &trials {
                let b = match variant {
                    FalseTypicalityVariant::Exact => base.with_gamma_sq(tr.gamma_sq)?,
                    _ => base.with_off_support_energy(tr.off_energy)?,
                };
                total += match false_typicality_bound(&b, variant) {
                    Ok(v) => v,
                    Err(Error::Precondition(_)) => {
                        if variant == FalseTypicalityVariant::Exact {
                            violations += 1;
                        }
                        1.0
                    }
                    Err(other) => return Err(other),
                };
            }
            report.rows.push(
                MetricRow::new("false_typicality_probability", p, d)
                    .se(proportion_se(p, cfg.trials))
                    .bound(variant.name(), total / cfg.trials as f64)
                    .eps(e),
            );
        }
        if violations > 0 {
            report.warnings.push(format!(
                "eps={e}: {violations} instance(s) have gamma_sq <= eps; their exact bound is taken as 1"
            ));
        }
        report.rows.push(MetricRow::new("gamma_sq_not_above_eps", fraction(violations, cfg.trials), d).eps(e));
    }
    let g: Vec<f64> = trials.iter().map(|tr| tr.gamma_sq).collect();
    let gm = Moments::of(&g);
    let mut row = MetricRow::new("gamma_sq", gm.mean, d);
    if cfg.matrix_mode == MatrixMode::ResampledPerTrial {
        row = row.se(gm.se_mean);
    }
    report.rows.push(row);
    let phi2: Vec<f64> = trials.iter().map(|tr| tr.phi2).collect();
    let mo = Moments::of(&phi2);
    // Mixture moments over instances: conditional mean dof·σ² + Nγ², conditional
    // variance 2·dof·σ⁴ + 4σ²Nγ².
    let cond_var_mean = 2.0 * dof * s2 * s2 + 4.0 * s2 * n * gm.mean;
    let spread = if gm.count > 1 { n * n * gm.var * (gm.count - 1) as f64 / gm.count as f64 } else { 0.0 };
    report.rows.push(
        MetricRow::new("phi2_mean", mo.mean, d).se(mo.se_mean).bound("noncentral_chi2_mean", dof * s2 + n * gm.mean),
    );
    report
        .rows
        .push(MetricRow::new("phi2_var", mo.var, d).se(mo.se_var).bound("noncentral_chi2_var", cond_var_mean + spread));
    report.elapsed = clock.elapsed();
    Ok(report)
}

struct MseTrial {
    per_eps: Vec<(f64, Outcome, Option<bool>)>,
    slse_err: f64,
    crb: f64,
    ml_err: Option<f64>,
    s_norm_sq: f64,
    rank_deficient: u64,
}

fn sq_err<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().to_f64_lossy()
}

/// Typicality-estimator MSE over an `ε` sweep, against the genie-aided least
/// squares MSE and the Cramér–Rao bound. Errors are measured over all `M`
/// coordinates.
pub fn run_mse<T: Real>(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (mut report, clock) = start(cfg, "mse")?;
    let opts = ScanOptions::default().with_budget(cfg.budget);
    let eps_t: Vec<T> = cfg.eps.iter().map(|&e| T::of(e)).collect();
    let sigma = T::of(cfg.sigma_n_sq);
    let crb_fixed = match cfg.matrix_mode {
        MatrixMode::FixedAcrossTrials => {
            let inst = make_instance::<T>(cfg, 0)?;
            Some(crb_s(&inst.a, inst.s.support(), sigma)?.to_f64_lossy())
        }
        MatrixMode::ResampledPerTrial => None,
    };
    let trials = run_trials::<T, _>(cfg, |t, inst| {
        let (a, s) = (&inst.a, &inst.s);
        let y = measure(cfg, t, inst);
        let scan = scan_supports(a, &y, cfg.k, sigma, &eps_t, &opts, cfg.ml_oracle)?;
        let ml = scan.min_residual.as_ref().map(|(sup, _)| sup.clone());
        let mut per_eps = Vec::with_capacity(cfg.eps.len());
        for tally in &scan.per_eps {
            let est = estimate_from_tally(a, &y, tally, scan.rank_deficient)?;
            let agree = match (&est.detected_support, &ml) {
                (Some(det), Some(ml)) => Some(det == ml),
                _ => None,
            };
            per_eps.push((sq_err(s.values(), &est.estimate), est.outcome, agree));
        }
        let ml_err = match &ml {
            Some(sup) => Some(sq_err(s.values(), &embed(sup, &slse(a, sup, &y)?, cfg.m))),
            None => None,
        };
        let crb = match crb_fixed {
            Some(c) => c,
            None => crb_s(a, s.support(), sigma)?.to_f64_lossy(),
        };
        Ok(MseTrial {
            per_eps,
            slse_err: sq_err(&s.taps(), &slse(a, s.support(), &y)?),
            crb,
            ml_err,
            s_norm_sq: s.norm_sq().to_f64_lossy(),
            rank_deficient: scan.rank_deficient,
        })
    })?;
    let d = dims(cfg);
    let tn = cfg.trials;
    let crb = Moments::of(&trials.iter().map(|tr| tr.crb).collect::<Vec<_>>());
    let s_norm = Moments::of(&trials.iter().map(|tr| tr.s_norm_sq).collect::<Vec<_>>()).mean;
    let mut best: Option<(f64, f64, f64)> = None;
    for (j, &e) in cfg.eps.iter().enumerate() {
        let errs: Vec<f64> = trials.iter().map(|tr| tr.per_eps[j].0).collect();
        let mo = Moments::of(&errs);
        let b = BoundInputs::new(cfg.n, cfg.k, cfg.m, cfg.sigma_n_sq, e)?.with_signal(cfg.mu * cfg.mu, s_norm)?;
        let bound = mse_upper_bound_with(&b, MseDenominator::Doubled)?;
        report
            .rows
            .push(MetricRow::new("mse_typical", mo.mean, d).se(mo.se_mean).bound("mse_upper_bound", bound).eps(e));
        let ratio = mo.mean / crb.mean;
        let ratio_se = mo.se_mean / crb.mean;
        report.rows.push(MetricRow::new("mse_typical_over_crb", ratio, d).se(ratio_se).eps(e));
        if best.is_none_or(|(r, _, _)| ratio < r) {
            best = Some((ratio, ratio_se, e));
        }
        for outcome in [Outcome::Unique, Outcome::NoneTypical, Outcome::Ambiguous] {
            let c = trials.iter().filter(|tr| tr.per_eps[j].1 == outcome).count();
            let p = fraction(c, tn);
            report
                .rows
                .push(MetricRow::new(format!("outcome_{}", outcome.name()), p, d).se(proportion_se(p, tn)).eps(e));
        }
        if cfg.ml_oracle {
            let judged: Vec<bool> = trials.iter().filter_map(|tr| tr.per_eps[j].2).collect();
            if !judged.is_empty() {
                let p = fraction(judged.iter().filter(|&&x| x).count(), judged.len());
                report
                    .rows
                    .push(MetricRow::new("ml_agreement_given_unique", p, d).se(proportion_se(p, judged.len())).eps(e));
            }
        }
    }
    if let Some((r, se, e)) = best {
        report.rows.push(MetricRow::new("mse_typical_over_crb_best", r, d).se(se).eps(e));
    }
    let slse_mo = Moments::of(&trials.iter().map(|tr| tr.slse_err).collect::<Vec<_>>());
    report.rows.push(MetricRow::new("mse_slse", slse_mo.mean, d).se(slse_mo.se_mean).bound("crb_s", crb.mean));
    let mut crb_row = MetricRow::new("crb_s", crb.mean, d).bound("crb_s_asymptotic", cfg.alpha() * cfg.sigma_n_sq);
    if cfg.matrix_mode == MatrixMode::ResampledPerTrial {
        crb_row = crb_row.se(crb.se_mean);
    }
    report.rows.push(crb_row);
    if cfg.ml_oracle {
        let ml: Vec<f64> = trials.iter().filter_map(|tr| tr.ml_err).collect();
        let mo = Moments::of(&ml);
        report.rows.push(MetricRow::new("mse_ml", mo.mean, d).se(mo.se_mean));
    }
    let rd: u64 = trials.iter().map(|tr| tr.rank_deficient).sum();
    report.rows.push(MetricRow::new("rank_deficient_per_trial", rd as f64 / tn as f64, d));
    report.elapsed = clock.elapsed();
    Ok(report)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Number of matrices summarised per `(ensemble, N)` in `run_concentration`.
const GRAM_SAMPLES: usize = 50;

/// Concentration violation rates and column Gram statistics for every
/// ensemble over the `N` grid. `x` is a signal drawn from the config and the
/// deviation threshold is the first `eps` value, which must lie in `(0,1)`.
pub fn run_concentration<T: Real>(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (mut report, clock) = start(cfg, "concentration")?;
    let rel = cfg.eps[0];
    let x: SparseSignal<T> = sample_sparse_signal(
        cfg.m,
        cfg.k,
        cfg.mu,
        cfg.signal_mode,
        cfg.support_mode,
        derive_seed(cfg.seed, 0, Stream::Signal),
    )?;
    for kind in EnsembleKind::ALL {
        for n in cfg.grid() {
            let d = RowDims { n, ..dims(cfg) };
            let rate = concentration_violation_rate(kind, n, cfg.m, x.values(), rel, cfg.trials, cfg.seed)?;
            let mut row =
                MetricRow::new(format!("violation_rate[{kind}]"), rate, d).se(proportion_se(rate, cfg.trials)).eps(rel);
            if kind == EnsembleKind::GaussianUnit {
                let tail = 2.0 * (-(n as f64) * (rel * rel / 4.0 - rel * rel * rel / 6.0)).exp();
                row = row.bound("gaussian_tail", tail.min(1.0));
            }
            report.rows.push(row);
            let samples = cfg.trials.min(GRAM_SAMPLES);
            let stats = (0..samples as u64)
                .into_par_iter()
                .map(|g| {
                    let a: MeasurementMatrix<T> =
                        sample_matrix(kind, n, cfg.m, derive_seed(cfg.seed, g, Stream::Matrix))?;
                    let st = column_gram_stats(&a)?;
                    Ok((st.max_offdiag.to_f64_lossy(), st.diag_min.to_f64_lossy(), st.diag_max.to_f64_lossy()))
                })
                .collect::<Result<Vec<_>>>()?;
            let d_g = RowDims { trials: samples, ..d };
            report.rows.push(MetricRow::new(
                format!("gram_max_offdiag_median[{kind}]"),
                median(stats.iter().map(|s| s.0).collect()),
                d_g,
            ));
            report.rows.push(MetricRow::new(
                format!("gram_diag_min_median[{kind}]"),
                median(stats.iter().map(|s| s.1).collect()),
                d_g,
            ));
            report.rows.push(MetricRow::new(
                format!("gram_diag_max_median[{kind}]"),
                median(stats.iter().map(|s| s.2).collect()),
                d_g,
            ));
        }
    }
    report.elapsed = clock.elapsed();
    Ok(report)
}

/// Tabulates the closed-form bounds over the `N` grid at the config's `α` and
/// `β`. Wrong-support bounds assume a single swapped tap of magnitude `μ`, for
/// which `E γ² = μ²(N−K)/N`.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (mut report, clock) = start(cfg, "bounds")?;
    let (alpha, beta) = (cfg.alpha(), cfg.beta());
    let mu_sq = cfg.mu * cfg.mu;
    let s2 = cfg.sigma_n_sq;
    for n in cfg.grid() {
        let k = ((n as f64 * alpha).round() as usize).clamp(1, n - 1);
        let m = ((k as f64 * beta).round() as usize).max(k);
        let d = RowDims { n, m, k, trials: 0, ..dims(cfg) };
        if let Ok(thr) = alpha_threshold(m as f64 / k as f64) {
            report.rows.push(MetricRow::new("alpha_threshold", thr, d));
        }
        report.rows.push(MetricRow::new("crb_s_asymptotic", k as f64 / n as f64 * s2, d));
        for &e in &cfg.eps {
            let base = BoundInputs::new(n, k, m, s2, e)?;
            report.rows.push(MetricRow::new("chernoff_miss", chernoff_miss_terms(&base).total(), d).eps(e));
            let gamma = mu_sq * (n - k) as f64 / n as f64;
            let with_gamma = base.with_gamma_sq(gamma)?;
            let with_energy = base.with_off_support_energy(mu_sq)?;
            for variant in FalseTypicalityVariant::ALL {
                let b = if variant == FalseTypicalityVariant::Exact { &with_gamma } else { &with_energy };
                match false_typicality_bound(b, variant) {
                    Ok(v) => {
                        report.rows.push(MetricRow::new(format!("false_typicality_{}", variant.name()), v, d).eps(e))
                    }
                    Err(Error::Precondition(msg)) => report.warnings.push(format!("N={n} eps={e}: {msg}")),
                    Err(other) => return Err(other),
                }
            }
            if s2 > 0.0 && gamma > e {
                let ns = nu_star(&with_gamma)?;
                let res = resolve_nu_star_scale(&with_gamma, 100_000)?;
                report.rows.push(MetricRow::new("nu_star", ns.nu, d).bound(res.chosen.name(), ns.g_min).eps(e));
                report.rows.push(MetricRow::new("g_min", ns.g_min, d).bound("closed_form", ns.g_closed_form).eps(e));
            }
            let sig = base.with_signal(mu_sq, k as f64 * mu_sq)?;
            for denom in [MseDenominator::Doubled, MseDenominator::Single] {
                let v = mse_upper_bound_with(&sig, denom)?;
                report.rows.push(
                    MetricRow::new(format!("mse_upper_bound[{}]", denom.name()), v, d)
                        .bound("crb_s_asymptotic", k as f64 / n as f64 * s2)
                        .eps(e),
                );
            }
            if m > k {
                report.rows.push(MetricRow::new("f_at_1", f_z(1.0, &sig)?, d).eps(e));
                report.rows.push(MetricRow::new("f_at_1_over_k", f_z(1.0 / k as f64, &sig)?, d).eps(e));
            }
        }
    }
    report.elapsed = clock.elapsed();
    Ok(report)
}
