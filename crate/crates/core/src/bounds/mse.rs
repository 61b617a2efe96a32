use super::BoundInputs;
use crate::error::{Error, Result};
use crate::estimators::binomial;
use crate::scalar::Real;

/// `ln C(n, k)`; exact when the coefficient fits in 53 bits.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let exact = binomial(n, k);
    if exact < (1u128 << 53) {
        return (exact as f64).ln();
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Denominator of the per-`k'` exponent in the MSE bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MseDenominator {
    /// `2k'μ² + σ_n²`.
    Doubled,
    /// `k'μ² + σ_n²`.
    Single,
}

impl MseDenominator {
    pub fn name(self) -> &'static str {
        match self {
            MseDenominator::Doubled => "doubled",
            MseDenominator::Single => "single",
        }
    }
}

/// `ln` of the `k'`-th summand: `C(K,k')C(M−K,k')` times the exponential
/// factor. The factor is taken as 1 when `k'μ² ≤ ε'`.
pub fn mse_log_summand<T: Real>(b: &BoundInputs<T>, kp: usize, denom: MseDenominator) -> Result<f64> {
    if kp == 0 || kp > b.k {
        return Err(Error::InvalidParameter(format!("k' must lie in 1..={}, got {kp}", b.k)));
    }
    let mu_sq = b.mu_sq()?.to_f64_lossy();
    let eps_prime = b.eps_prime.to_f64_lossy();
    let sigma = b.sigma_n_sq.to_f64_lossy();
    let e = kp as f64 * mu_sq;
    let ln_factor = if e <= eps_prime {
        0.0
    } else {
        let d = match denom {
            MseDenominator::Doubled => 2.0 * e + sigma,
            MseDenominator::Single => e + sigma,
        };
        let r = (e - eps_prime) / d;
        -((b.n - b.k) as f64) / 4.0 * r * r
    };
    Ok(ln_binomial(b.k, kp) + ln_binomial(b.m - b.k, kp) + ln_factor)
}

/// Upper bound on `E‖s_τ − ŝ‖²` for the typicality estimator.
pub fn mse_upper_bound<T: Real>(b: &BoundInputs<T>) -> Result<T> {
    mse_upper_bound_with(b, MseDenominator::Doubled)
}

/// As [`mse_upper_bound`] with a chosen exponent denominator. May return
/// `+∞` when the sum overflows.
pub fn mse_upper_bound_with<T: Real>(b: &BoundInputs<T>, denom: MseDenominator) -> Result<T> {
    let s_norm_sq = b.s_norm_sq()?.to_f64_lossy();
    let sp = b.sigma_prime_sq.to_f64_lossy();
    let logs = (1..=b.k).map(|kp| mse_log_summand(b, kp, denom)).collect::<Result<Vec<f64>>>()?;
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ln_sum = top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
    let prefactor = b.k as f64 * sp + s_norm_sq;
    let tail = if prefactor == 0.0 { 0.0 } else { (prefactor.ln() + ln_sum).exp() };
    Ok(T::of(b.alpha.to_f64_lossy() * sp + tail))
}

/// `Kz ln(e/z) + Kz ln((β−1)e/z) − C₀K·[(Kzμ² − ε')/(2Kzμ² + σ_n²)]²`.
pub fn f_z<T: Real>(z: T, b: &BoundInputs<T>) -> Result<T> {
    if !(z > T::zero() && z <= T::one()) {
        return Err(Error::InvalidParameter(format!("z must lie in (0,1], got {z}")));
    }
    if !(b.beta > T::one()) {
        return Err(Error::Precondition(format!("f(z) needs beta > 1, got {}", b.beta)));
    }
    let mu_sq = b.mu_sq()?;
    let kf = T::of_usize(b.k);
    let e = T::one().exp();
    let kz = kf * z;
    let r = (kz * mu_sq - b.eps_prime) / (T::of(2.0) * kz * mu_sq + b.sigma_n_sq);
    Ok(kz * (e / z).ln() + kz * ((b.beta - T::one()) * e / z).ln() - b.c0 * kf * r * r)
}

/// `max_{k'=1..K} f(k'/K)` and the maximising `k'`.
pub fn f_z_grid_max<T: Real>(b: &BoundInputs<T>) -> Result<(usize, T)> {
    let kf = T::of_usize(b.k);
    let mut best = (0, T::neg_infinity());
    for kp in 1..=b.k {
        let v = f_z(T::of_usize(kp) / kf, b)?;
        if v > best.1 {
            best = (kp, v);
        }
    }
    Ok(best)
}
