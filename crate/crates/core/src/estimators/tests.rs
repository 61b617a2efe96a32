use super::*;
use crate::ensembles::{sample_matrix, EnsembleKind};
use crate::linalg::Matrix;
use crate::projections::{residual_sq_norm, submatrix};
use crate::rng::{substream, Stream};
use crate::typicality::typicality_statistic;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian(n: usize, m: usize, seed: u64) -> MeasurementMatrix<f64> {
    sample_matrix(EnsembleKind::GaussianUnit, n, m, seed).unwrap()
}

fn noisy(a: &MeasurementMatrix<f64>, s: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = substream(seed, 0, Stream::Noise);
    a.apply(s).into_iter().map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal)).collect()
}

#[test]
fn sparse_signal_invariants() {
    let s = SparseSignal::from_values(vec![0.0, -2.0, 0.0, 0.5, 3.0]).unwrap();
    assert_eq!(s.support().indices(), &[1, 3, 4]);
    assert_eq!(s.k(), 3);
    assert_eq!(s.mu(), 0.5);
    assert_eq!(s.taps(), vec![-2.0, 0.5, 3.0]);
    assert!(SparseSignal::from_values(vec![0.0; 3]).is_err());
    assert!(SparseSignal::<f64>::from_values(vec![f64::NAN, 1.0]).is_err());
}

#[test]
fn slse_noiseless_recovers_taps() {
    let a = gaussian(20, 10, 1);
    let tau = SupportSet::new(vec![2, 5, 7], 10).unwrap();
    let taps = [1.5, -0.25, 4.0];
    let y = submatrix(&a, &tau).unwrap().mul_vec(&taps);
    let est = slse(&a, &tau, &y).unwrap();
    for (e, t) in est.iter().zip(taps) {
        assert!((e - t).abs() <= 1e-9 * t.abs());
    }
}

#[test]
fn slse_orthonormal_columns_is_projection() {
    let mut e = Matrix::zeros(5, 3);
    let h = 0.5f64.sqrt();
    e[(0, 0)] = h;
    e[(1, 0)] = h;
    e[(0, 1)] = h;
    e[(1, 1)] = -h;
    e[(3, 2)] = 1.0;
    let a = MeasurementMatrix::synthetic(e).unwrap();
    let tau = SupportSet::first(3);
    let y = [0.3, -1.2, 5.0, 0.7, 2.0];
    let est = slse(&a, &tau, &y).unwrap();
    let proj = submatrix(&a, &tau).unwrap().tr_mul_vec(&y);
    for (u, v) in est.iter().zip(proj) {
        assert!((u - v).abs() < 1e-14);
    }
}

#[test]
fn slse_rejects_rank_deficient() {
    let a = gaussian(6, 3, 2);
    let mut cols: Vec<Vec<f64>> = (0..3).map(|j| a.column(j)).collect();
    cols[1] = cols[0].clone();
    let dup = MeasurementMatrix::synthetic(Matrix::from_columns(6, &cols).unwrap()).unwrap();
    assert!(matches!(slse(&dup, &SupportSet::first(2), &[1.0; 6]), Err(Error::RankDeficient { .. })));
}

#[test]
fn slse_mse_matches_trace_formula() {
    let (n, m, k, trials) = (32, 64, 3, 200_000u64);
    let a = gaussian(n, m, 3);
    let tau = SupportSet::new(vec![4, 17, 40], m).unwrap();
    let span = ColumnSpan::new(&a, &tau).unwrap();
    let sigma2 = 1.0;
    let taps = [1.0, -2.0, 0.5];
    let clean = submatrix(&a, &tau).unwrap().mul_vec(&taps);
    let mut mse = 0.0;
    let mut bias = [0.0; 3];
    for t in 0..trials {
        let mut rng = substream(11, t, Stream::Noise);
        let y: Vec<f64> = clean.iter().map(|c| c + rng.sample::<f64, _>(StandardNormal)).collect();
        let est = span.least_squares(&y);
        for i in 0..k {
            let d = est[i] - taps[i];
            mse += d * d;
            bias[i] += d;
        }
    }
    mse /= trials as f64;
    let crb = sigma2 * span.inverse_gram_trace();
    assert!((mse - crb).abs() < 0.02 * crb, "mse {mse} vs {crb}");
    // Unbiasedness: per-coordinate mean error within 4 standard errors.
    let inv = submatrix(&a, &tau).unwrap();
    let cov = inv.transpose().matmul(&inv).inverse().unwrap();
    for i in 0..k {
        let se = (cov[(i, i)] / trials as f64).sqrt();
        assert!((bias[i] / trials as f64).abs() < 4.0 * se);
    }
}

#[test]
fn typical_estimator_noiseless_unique() {
    let (n, m, k) = (12, 8, 2);
    let a = gaussian(n, m, 4);
    let s = SparseSignal::from_values(vec![0.0, 0.0, 1.3, 0.0, 0.0, -0.8, 0.0, 0.0]).unwrap();
    let y = a.apply(s.values());
    let params = TypicalityParams::new(0.0, 1e-6).unwrap();
    // Brute force: only τ has residual below Nε.
    for xi in enumerate_supports(m, k).unwrap() {
        let r = residual_sq_norm(&a, &xi, &y).unwrap();
        assert_eq!(r < n as f64 * 1e-6, &xi == s.support(), "{xi}");
    }
    let res = joint_typicality_estimate(&a, &y, k, &params).unwrap();
    assert_eq!(res.outcome, Outcome::Unique);
    assert_eq!(res.detected_support.as_ref(), Some(s.support()));
    for (e, v) in res.estimate.iter().zip(s.values()) {
        assert!((e - v).abs() < 1e-9);
    }
}

#[test]
fn typical_estimator_duplicate_columns_ambiguous() {
    let (n, m) = (10, 4);
    let a = gaussian(n, m, 5);
    let mut cols: Vec<Vec<f64>> = (0..m).map(|j| a.column(j)).collect();
    cols[3] = cols[1].clone();
    let dup = MeasurementMatrix::synthetic(Matrix::from_columns(n, &cols).unwrap()).unwrap();
    let y: Vec<f64> = cols[1].iter().map(|v| 2.0 * v).collect();
    let params = TypicalityParams::new(0.0, 1e-6).unwrap();
    for strategy in [ScanStrategy::Incremental, ScanStrategy::Direct] {
        let opts = ScanOptions::default().with_strategy(strategy);
        let res = joint_typicality_estimate_with(&dup, &y, 1, &params, &opts).unwrap();
        assert_eq!(res.outcome, Outcome::Ambiguous);
        assert!(res.detected_support.is_none());
        assert!(res.estimate.iter().all(|&v| v == 0.0));
    }
    // K = 2: {2,4} is rank-deficient and skipped; {1,2},{1,4},... are typical.
    let res =
        joint_typicality_estimate_with(&dup, &y, 2, &params, &ScanOptions::default().with_early_stop(false)).unwrap();
    assert_eq!(res.rank_deficient_skipped, 1);
    assert_eq!(res.outcome, Outcome::Ambiguous);
}

#[test]
fn typical_estimator_none_typical() {
    let (n, m, k) = (16, 7, 2);
    let a = gaussian(n, m, 6);
    let y = noisy(&a, &[0.0; 7], 1.0, 9);
    let min_stat = enumerate_supports(m, k)
        .unwrap()
        .map(|xi| typicality_statistic(&a, &xi, &y, 1.0).unwrap())
        .fold(f64::INFINITY, f64::min);
    let params = TypicalityParams::new(1.0, 0.5 * min_stat).unwrap();
    let res = joint_typicality_estimate(&a, &y, k, &params).unwrap();
    assert_eq!(res.outcome, Outcome::NoneTypical);
    assert_eq!(res.typical_count, 0);
    assert!(res.estimate.iter().all(|&v| v == 0.0));
}

#[test]
fn budget_is_enforced() {
    let a = gaussian(30, 24, 1);
    let y = vec![0.0; 30];
    let params = TypicalityParams::new(1.0, 0.1).unwrap();
    let opts = ScanOptions::default().with_budget(10_000);
    let err = joint_typicality_estimate_with(&a, &y, 4, &params, &opts).unwrap_err();
    assert_eq!(err, Error::BudgetExceeded { count: 10626, budget: 10_000 });
}

#[test]
fn incremental_and_direct_scans_agree() {
    for seed in 0..30 {
        let (n, m, k) = (14, 9, 3);
        let a = gaussian(n, m, seed);
        let mut v = vec![0.0; m];
        v[1] = 1.0;
        v[4] = -0.7;
        v[8] = 0.4;
        let y = noisy(&a, &v, 0.3, seed + 100);
        let eps = [0.005, 0.02, 0.05, 0.2];
        let full = ScanOptions::default().with_early_stop(false);
        let inc = scan_supports(&a, &y, k, 0.09, &eps, &full, true).unwrap();
        let dir = scan_supports(&a, &y, k, 0.09, &eps, &full.with_strategy(ScanStrategy::Direct), true).unwrap();
        assert_eq!(inc.per_eps, dir.per_eps, "seed {seed}");
        assert_eq!(inc.min_residual.as_ref().unwrap().0, dir.min_residual.as_ref().unwrap().0);
        assert_eq!(inc.visited, 84);
        assert_eq!(inc.rank_deficient, 0);
    }
}

#[test]
fn estimator_is_pure_and_matches_slse_when_correct() {
    let (n, m, k) = (24, 10, 2);
    let a = gaussian(n, m, 12);
    let mut v = vec![0.0; m];
    v[3] = 2.0;
    v[6] = -2.0;
    let s = SparseSignal::from_values(v).unwrap();
    let y = noisy(&a, s.values(), 0.5, 4);
    let params = TypicalityParams::new(0.25, 0.08).unwrap();
    let r1 = joint_typicality_estimate(&a, &y, k, &params).unwrap();
    let r2 = joint_typicality_estimate(&a, &y, k, &params).unwrap();
    assert_eq!(r1, r2);
    if r1.detected_support.as_ref() == Some(s.support()) {
        let direct = embed(s.support(), &slse(&a, s.support(), &y).unwrap(), m);
        assert_eq!(r1.estimate, direct);
    }
}

#[test]
fn ml_oracle_noiseless_returns_true_support() {
    let (n, m, k) = (12, 9, 3);
    let a = gaussian(n, m, 21);
    let mut v = vec![0.0; m];
    v[0] = 1.0;
    v[5] = 2.0;
    v[8] = -1.5;
    let s = SparseSignal::from_values(v).unwrap();
    let y = a.apply(s.values());
    let (support, coeffs) = exhaustive_ml_oracle(&a, &y, k).unwrap();
    assert_eq!(&support, s.support());
    for (c, t) in coeffs.iter().zip(s.taps()) {
        assert!((c - t).abs() < 1e-9);
    }
}

#[test]
fn ml_oracle_residual_is_minimal() {
    let (n, m, k) = (10, 8, 2);
    let a = gaussian(n, m, 22);
    let y = noisy(&a, &[0.0; 8], 1.0, 1);
    let (support, _) = exhaustive_ml_oracle(&a, &y, k).unwrap();
    let best = residual_sq_norm(&a, &support, &y).unwrap();
    for xi in enumerate_supports(m, k).unwrap() {
        assert!(best <= residual_sq_norm(&a, &xi, &y).unwrap() + 1e-12);
    }
}

#[test]
fn ml_agrees_with_unique_typical_at_high_snr() {
    let (n, m, k, sigma2) = (32, 16, 2, 1e-4f64);
    let params = TypicalityParams::new(sigma2, 0.3 * sigma2).unwrap();
    let (mut unique, mut agree) = (0, 0);
    for t in 0..200u64 {
        let a = gaussian(n, m, 1000 + t);
        let mut v = vec![0.0; m];
        v[(t % 16) as usize] = 1.0;
        v[((t + 5) % 16) as usize] = -1.0;
        let y = noisy(&a, &v, sigma2.sqrt(), t);
        let res = joint_typicality_estimate(&a, &y, k, &params).unwrap();
        if res.outcome == Outcome::Unique {
            unique += 1;
            let (ml, _) = exhaustive_ml_oracle(&a, &y, k).unwrap();
            agree += usize::from(res.detected_support.unwrap() == ml);
        }
    }
    assert!(unique > 0);
    let rate = agree as f64 / unique as f64;
    assert!(rate >= 0.95, "agreement {rate} over {unique}");
}
