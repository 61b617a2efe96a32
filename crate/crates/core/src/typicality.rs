//! Joint typicality of a measurement vector with a candidate support.
//!
//! `y` and `ξ` are jointly typical with order `ε` iff
//! `| (1/N)‖Π⊥_ξ y‖² − ((N−K)/N) σ_n² | < ε`. `ε` is absolute, in signal²
//! units.

use crate::ensembles::MeasurementMatrix;
use crate::error::{Error, Result};
use crate::projections::{residual_sq_norm, SupportSet};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalityParams<T> {
    pub sigma_n_sq: T,
    pub eps: T,
}

impl<T: Real> TypicalityParams<T> {
    pub fn new(sigma_n_sq: T, eps: T) -> Result<Self> {
        if !(sigma_n_sq >= T::zero()) || !sigma_n_sq.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma_n_sq must be >= 0, got {sigma_n_sq}")));
        }
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("eps must be > 0, got {eps}")));
        }
        Ok(Self { sigma_n_sq, eps })
    }

    /// `ε` given as a fraction of `σ_n²`.
    pub fn relative(sigma_n_sq: T, eps_fraction: T) -> Result<Self> {
        Self::new(sigma_n_sq, eps_fraction * sigma_n_sq)
    }
}

/// The statistic from a precomputed residual `‖Π⊥_ξ y‖²`.
pub fn statistic_from_residual<T: Real>(residual_sq: T, n: usize, k: usize, sigma_n_sq: T) -> T {
    let nf = T::of_usize(n);
    (residual_sq / nf - T::of_usize(n - k) / nf * sigma_n_sq).abs()
}

/// `| (1/N)‖Π⊥_ξ y‖² − ((N−K)/N) σ_n² |`.
pub fn typicality_statistic<T: Real>(a: &MeasurementMatrix<T>, xi: &SupportSet, y: &[T], sigma_n_sq: T) -> Result<T> {
    if xi.k() >= a.n() {
        return Err(Error::InvalidParameter(format!("typicality needs K < N (K={}, N={})", xi.k(), a.n())));
    }
    let r = residual_sq_norm(a, xi, y)?;
    Ok(statistic_from_residual(r, a.n(), xi.k(), sigma_n_sq))
}

/// Strict comparison: a statistic exactly equal to `ε` is not typical.
pub fn is_typical<T: Real>(
    a: &MeasurementMatrix<T>,
    xi: &SupportSet,
    y: &[T],
    params: &TypicalityParams<T>,
) -> Result<bool> {
    Ok(typicality_statistic(a, xi, y, params.sigma_n_sq)? < params.eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_matrix, EnsembleKind};
    use crate::projections::submatrix;
    use crate::rng::{substream, Stream};
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn params_validation() {
        assert!(TypicalityParams::new(1.0, 0.0).is_err());
        assert!(TypicalityParams::new(-1.0, 0.1).is_err());
        assert!(TypicalityParams::new(0.0, 0.1).is_ok());
        let p = TypicalityParams::relative(2.0, 0.25).unwrap();
        assert_eq!(p.eps, 0.5);
    }

    #[test]
    fn noiseless_in_span_is_zero_and_typical() {
        let a = sample_matrix::<f64>(EnsembleKind::GaussianUnit, 16, 6, 1).unwrap();
        let xi = SupportSet::new(vec![0, 3], 6).unwrap();
        let y = submatrix(&a, &xi).unwrap().mul_vec(&[1.0, -2.0]);
        let stat = typicality_statistic(&a, &xi, &y, 0.0).unwrap();
        assert!(stat < 1e-12);
        for eps in [1e-9, 0.1, 10.0] {
            assert!(is_typical(&a, &xi, &y, &TypicalityParams::new(0.0, eps).unwrap()).unwrap());
        }
    }

    #[test]
    fn zero_measurement_statistic() {
        let (n, k) = (16, 3);
        let a = sample_matrix::<f64>(EnsembleKind::GaussianUnit, n, 6, 2).unwrap();
        let xi = SupportSet::first(k);
        let y = vec![0.0; n];
        let stat = typicality_statistic(&a, &xi, &y, 1.0).unwrap();
        let expected = (n - k) as f64 / n as f64;
        assert_eq!(stat, expected);
        let at_boundary = TypicalityParams::new(1.0, expected).unwrap();
        assert!(!is_typical(&a, &xi, &y, &at_boundary).unwrap());
        let below = TypicalityParams::new(1.0, expected * 0.5).unwrap();
        assert!(!is_typical(&a, &xi, &y, &below).unwrap());
    }

    #[test]
    fn monotone_in_eps() {
        let a = sample_matrix::<f64>(EnsembleKind::Rademacher, 20, 5, 3).unwrap();
        let xi = SupportSet::first(2);
        let mut rng = substream(1, 0, Stream::Noise);
        for _ in 0..50 {
            let y: Vec<f64> = (0..20).map(|_| rng.sample(StandardNormal)).collect();
            let mut prev = false;
            for eps in [0.01, 0.05, 0.1, 0.3, 1.0, 3.0] {
                let t = is_typical(&a, &xi, &y, &TypicalityParams::new(1.0, eps).unwrap()).unwrap();
                assert!(!prev || t);
                prev = t;
            }
        }
    }

    #[test]
    fn residual_mean_on_true_support() {
        // E{(1/N)‖Π⊥_τ y‖²} = (N−K)σ²/N.
        let (n, k, trials) = (64, 4, 100_000u64);
        let a = sample_matrix::<f64>(EnsembleKind::GaussianUnit, n, 8, 5).unwrap();
        let tau = SupportSet::first(k);
        let span = crate::projections::ColumnSpan::new(&a, &tau).unwrap();
        let signal = submatrix(&a, &tau).unwrap().mul_vec(&[1.0, -1.0, 2.0, 0.5]);
        let mut total = 0.0;
        for t in 0..trials {
            let mut rng = substream(77, t, Stream::Noise);
            let y: Vec<f64> = signal.iter().map(|s| s + rng.sample::<f64, _>(StandardNormal)).collect();
            total += span.residual_sq(&y) / n as f64;
        }
        let mean = total / trials as f64;
        let want = (n - k) as f64 / n as f64;
        assert!((mean - want).abs() < 0.01 * want, "{mean} vs {want}");
    }

    #[test]
    fn true_support_typical_with_high_probability() {
        let (n, k, trials) = (512, 4, 10_000u64);
        let a = sample_matrix::<f64>(EnsembleKind::GaussianUnit, n, 16, 6).unwrap();
        let tau = SupportSet::first(k);
        let params = TypicalityParams::new(1.0, 0.3).unwrap();
        let signal = submatrix(&a, &tau).unwrap().mul_vec(&[1.0; 4]);
        let mut hits = 0;
        for t in 0..trials {
            let mut rng = substream(3, t, Stream::Noise);
            let y: Vec<f64> = signal.iter().map(|s| s + rng.sample::<f64, _>(StandardNormal)).collect();
            hits += usize::from(is_typical(&a, &tau, &y, &params).unwrap());
        }
        assert!(hits as f64 >= 0.99 * trials as f64, "{hits}");
    }
}
