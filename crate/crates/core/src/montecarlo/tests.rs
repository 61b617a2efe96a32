use crate::ensembles::EnsembleKind;
use crate::error::Error;
use crate::projections::SupportSet;

use super::*;

fn cfg(n: usize, m: usize, k: usize) -> ExperimentConfig {
    ExperimentConfig { n, m, k, ..ExperimentConfig::default() }
}

fn value(r: &ExperimentReport, metric: &str, eps: Option<f64>) -> f64 {
    r.find(metric, eps).unwrap_or_else(|| panic!("missing {metric}")).value
}

#[test]
fn mode_parsing_round_trips() {
    for s in ["constant", "uniform:3.5"] {
        assert_eq!(s.parse::<SignalMode>().unwrap().to_string(), s);
    }
    for s in ["fixed", "resampled"] {
        assert_eq!(s.parse::<MatrixMode>().unwrap().to_string(), s);
    }
    for s in ["first", "random"] {
        assert_eq!(s.parse::<SupportMode>().unwrap().to_string(), s);
    }
    assert!("uniform:x".parse::<SignalMode>().is_err());
    assert!("other".parse::<MatrixMode>().is_err());
}

#[test]
fn config_validation() {
    assert!(cfg(64, 16, 4).validate().unwrap().is_empty());
    assert!(cfg(4, 16, 4).validate().is_err());
    assert!(cfg(64, 3, 4).validate().is_err());
    assert!(ExperimentConfig { trials: 0, ..cfg(64, 16, 4) }.validate().is_err());
    assert!(ExperimentConfig { mu: 0.0, ..cfg(64, 16, 4) }.validate().is_err());
    assert!(ExperimentConfig { eps: vec![], ..cfg(64, 16, 4) }.validate().is_err());
    assert!(ExperimentConfig { eps: vec![0.1, -1.0], ..cfg(64, 16, 4) }.validate().is_err());
    let bad_max = ExperimentConfig { signal_mode: SignalMode::UniformMagnitude { max: 0.5 }, ..cfg(64, 16, 4) };
    assert!(bad_max.validate().is_err());
    // α = 1/4 is above the threshold for β = 4.
    let w = cfg(16, 16, 4).validate().unwrap();
    assert_eq!(w.len(), 1);
    assert!(w[0].contains("threshold"));
}

#[test]
fn constant_signal_has_exact_magnitudes() {
    for seed in 0..20 {
        let s: SparseSignal<f64> =
            sample_sparse_signal(30, 6, 1.7, SignalMode::ConstantMagnitude, SupportMode::UniformRandom, seed).unwrap();
        assert_eq!(s.k(), 6);
        assert!(s.taps().iter().all(|v| v.abs() == 1.7));
    }
    let first: SparseSignal<f64> =
        sample_sparse_signal(10, 3, 1.0, SignalMode::ConstantMagnitude, SupportMode::FixedFirstK, 1).unwrap();
    assert_eq!(first.support().indices(), &[0, 1, 2]);
}

#[test]
fn uniform_signal_magnitudes() {
    let mode = SignalMode::UniformMagnitude { max: 3.0 };
    let mut total = 0.0;
    let mut count = 0;
    for seed in 0..25_000u64 {
        let s: SparseSignal<f64> = sample_sparse_signal(8, 4, 1.0, mode, SupportMode::UniformRandom, seed).unwrap();
        assert_eq!(s.k(), 4);
        assert!(s.mu() >= 1.0);
        for v in s.taps() {
            total += v.abs();
            count += 1;
        }
    }
    let mean = total / count as f64;
    assert!((mean - 2.0).abs() < 0.02, "{mean}");
}

#[test]
fn moments_helper() {
    let m = Moments::of(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(m.mean, 2.5);
    assert!((m.var - 5.0 / 3.0).abs() < 1e-15);
    assert_eq!(proportion_se(0.0, 10), 0.0);
}

#[test]
fn miss_probability_noiseless_is_zero() {
    let c = ExperimentConfig { sigma_n_sq: 0.0, eps: vec![1e-6, 0.1], trials: 200, ..cfg(32, 8, 3) };
    let r = run_miss_probability::<f64>(&c).unwrap();
    assert_eq!(value(&r, "miss_probability", Some(1e-6)), 0.0);
    assert_eq!(value(&r, "miss_probability", Some(0.1)), 0.0);
}

#[test]
fn phi1_moments_match_chi_square() {
    let c = ExperimentConfig { trials: 100_000, seed: 3, ..cfg(64, 16, 4) };
    let r = run_miss_probability::<f64>(&c).unwrap();
    let mean = r.find("phi1_mean", None).unwrap();
    let var = r.find("phi1_var", None).unwrap();
    assert!((mean.value / mean.bound.unwrap() - 1.0).abs() < 0.01);
    assert!((var.value / var.bound.unwrap() - 1.0).abs() < 0.05);
    let miss = r.find("miss_probability", Some(0.1)).unwrap();
    assert!(miss.value - 4.0 * miss.std_err.unwrap() <= miss.bound.unwrap());
}

#[test]
fn runs_are_deterministic() {
    let c = ExperimentConfig {
        trials: 300,
        matrix_mode: MatrixMode::ResampledPerTrial,
        support_mode: SupportMode::UniformRandom,
        eps: vec![0.1, 0.3],
        ..cfg(24, 10, 2)
    };
    let strip = |mut r: ExperimentReport| {
        r.elapsed = Default::default();
        r
    };
    assert_eq!(strip(run_mse::<f64>(&c).unwrap()), strip(run_mse::<f64>(&c).unwrap()));
    assert_eq!(strip(run_false_typicality::<f64>(&c).unwrap()), strip(run_false_typicality::<f64>(&c).unwrap()));
    let other = ExperimentConfig { seed: 1, ..c.clone() };
    assert_ne!(strip(run_mse::<f64>(&c).unwrap()).rows, strip(run_mse::<f64>(&other).unwrap()).rows);
}

#[test]
fn phi2_mean_matches_noncentral_chi_square() {
    let c = ExperimentConfig { trials: 100_000, seed: 4, ..cfg(64, 16, 4) };
    let r = run_false_typicality::<f64>(&c).unwrap();
    let mean = r.find("phi2_mean", None).unwrap();
    assert!((mean.value / mean.bound.unwrap() - 1.0).abs() < 0.01);
    let var = r.find("phi2_var", None).unwrap();
    assert!((var.value / var.bound.unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn disjoint_wrong_support_with_strong_signal_never_typical() {
    let c = ExperimentConfig {
        trials: 10_000,
        mu: 20.0,
        xi: Some(SupportSet::new(vec![8, 9, 10, 11], 16).unwrap()),
        // The exact bound saturates at exp(−(N−K)/16) as γ² grows.
        ..cfg(256, 16, 4)
    };
    let r = run_false_typicality::<f64>(&c).unwrap();
    for row in r.rows_named("false_typicality_probability") {
        assert_eq!(row.value, 0.0);
        if row.bound_name.as_deref() == Some("exact") {
            assert!(row.bound.unwrap() < 1e-4);
        }
    }
}

#[test]
fn one_swap_false_typicality_below_exact_bound() {
    let c = ExperimentConfig { trials: 20_000, eps: vec![0.1, 0.3], seed: 9, ..cfg(128, 16, 4) };
    let r = run_false_typicality::<f64>(&c).unwrap();
    for row in r.rows_named("false_typicality_probability") {
        assert!(row.value - 4.0 * row.std_err.unwrap() <= row.bound.unwrap(), "{row:?}");
    }
    assert_eq!(value(&r, "gamma_sq_not_above_eps", Some(0.1)), 0.0);
}

#[test]
fn false_typicality_rejects_true_support_as_candidate() {
    let c = ExperimentConfig { xi: Some(SupportSet::first(4)), trials: 10, ..cfg(64, 16, 4) };
    assert!(run_false_typicality::<f64>(&c).is_err());
}

#[test]
fn mse_noiseless_is_exact() {
    let c = ExperimentConfig {
        sigma_n_sq: 0.0,
        eps: vec![1e-6],
        trials: 100,
        matrix_mode: MatrixMode::ResampledPerTrial,
        support_mode: SupportMode::UniformRandom,
        ..cfg(16, 10, 2)
    };
    let r = run_mse::<f64>(&c).unwrap();
    assert!(value(&r, "mse_typical", Some(1e-6)) < 1e-18);
    assert_eq!(value(&r, "outcome_unique", Some(1e-6)), 1.0);
    assert_eq!(value(&r, "ml_agreement_given_unique", Some(1e-6)), 1.0);
}

#[test]
fn mse_slse_matches_crb() {
    let c = ExperimentConfig { trials: 200_000, seed: 5, eps: vec![0.2], ml_oracle: false, ..cfg(32, 6, 3) };
    let r = run_mse::<f64>(&c).unwrap();
    let row = r.find("mse_slse", None).unwrap();
    assert!((row.value / row.bound.unwrap() - 1.0).abs() < 0.02, "{row:?}");
    let outcomes: f64 =
        ["outcome_unique", "outcome_none_typical", "outcome_ambiguous"].iter().map(|m| value(&r, m, Some(0.2))).sum();
    assert!((outcomes - 1.0).abs() < 1e-12);
}

#[test]
fn mse_budget_is_respected() {
    let c = ExperimentConfig { budget: 100, trials: 2, ..cfg(40, 20, 4) };
    assert!(matches!(run_mse::<f64>(&c), Err(Error::BudgetExceeded { .. })));
}

#[test]
fn concentration_rows() {
    let c = ExperimentConfig { trials: 4000, eps: vec![0.2], n_grid: vec![64, 256, 1024], ..cfg(64, 16, 4) };
    let r = run_concentration::<f64>(&c).unwrap();
    for row in r
        .rows_named("gram_diag_min_median[rademacher]")
        .into_iter()
        .chain(r.rows_named("gram_diag_max_median[rademacher]"))
    {
        assert_eq!(row.value, 1.0);
    }
    for kind in EnsembleKind::ALL {
        let rates = r.rows_named(&format!("violation_rate[{kind}]"));
        assert_eq!(rates.len(), 3);
        for w in rates.windows(2) {
            let se = (w[0].std_err.unwrap().powi(2) + w[1].std_err.unwrap().powi(2)).sqrt();
            assert!(w[1].value <= w[0].value + 2.0 * se);
        }
    }
    let at_1024: Vec<f64> = EnsembleKind::ALL
        .iter()
        .map(|k| {
            r.rows_named(&format!("gram_max_offdiag_median[{k}]"))
                .into_iter()
                .find(|row| row.dims.n == 1024)
                .unwrap()
                .value
        })
        .collect();
    let (lo, hi) = at_1024.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi <= 2.0 * lo, "{at_1024:?}");
}

#[test]
fn bounds_table_has_resolution_rows() {
    let c = ExperimentConfig { eps: vec![0.1, 0.3], n_grid: vec![200, 2000], mu: 1.0, ..cfg(200, 40, 10) };
    let r = run_bounds(&c).unwrap();
    let nu_rows = r.rows_named("nu_star");
    assert_eq!(nu_rows.len(), 4);
    assert!(nu_rows.iter().all(|row| row.bound_name.as_deref() == Some("sigma_n_sq") && row.value < 0.0));
    let thr = r.rows_named("alpha_threshold")[0];
    assert!((thr.value - 1.0 / (9.0 + 4.0 * 3f64.ln())).abs() < 1e-12);
}
