//! Closed-form quantities: the genie-aided Cramér–Rao bound, the admissible
//! `α` region, Chernoff tail bounds for the typicality test and the MSE bound
//! of the typicality estimator.
//!
//! All bound formulas take a [`BoundInputs`]; derived quantities are computed
//! once in its constructor.

mod chernoff;
mod mse;

pub use chernoff::{
    chain_log_form, chain_quadratic, chain_sqrt_relaxed, chain_tight, chernoff_miss_bound, chernoff_miss_terms,
    false_typicality_bound, g_of_nu, ln_g_of_nu, nu_star, nu_star_with, resolve_nu_star_scale, stationary_identities,
    FalseTypicalityVariant, MissTerms, NuScale, NuStar, ScaleResolution, StationaryIdentities,
};
pub use mse::{f_z, f_z_grid_max, ln_binomial, mse_log_summand, mse_upper_bound, mse_upper_bound_with, MseDenominator};

use crate::ensembles::MeasurementMatrix;
use crate::error::{Error, Result};
use crate::projections::{ColumnSpan, SupportSet};
use crate::scalar::Real;

/// Problem sizes, noise level, typicality threshold and (optionally) the
/// signal-dependent quantities a particular bound needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs<T> {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub sigma_n_sq: T,
    pub eps: T,
    /// `K/N`.
    pub alpha: T,
    /// `M/K`.
    pub beta: T,
    /// `((N−K)/N) σ_n²`.
    pub sigma_prime_sq: T,
    /// `((N−K)/N) ε`.
    pub eps_prime: T,
    /// `(N−K)/(4K)`.
    pub c0: T,
    gamma_sq: Option<T>,
    mu_sq: Option<T>,
    s_norm_sq: Option<T>,
    off_support_energy: Option<T>,
}

fn check_nonneg<T: Real>(name: &str, v: T) -> Result<T> {
    if v.is_finite() && v >= T::zero() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn missing(name: &str) -> Error {
    Error::Precondition(format!("{name} is not set on these bound inputs"))
}

impl<T: Real> BoundInputs<T> {
    pub fn new(n: usize, k: usize, m: usize, sigma_n_sq: T, eps: T) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::InvalidParameter(format!("need 1 <= K < N (K={k}, N={n})")));
        }
        if m < k {
            return Err(Error::InvalidParameter(format!("need M >= K (M={m}, K={k})")));
        }
        check_nonneg("sigma_n_sq", sigma_n_sq)?;
        if !(eps.is_finite() && eps > T::zero()) {
            return Err(Error::InvalidParameter(format!("eps must be > 0, got {eps}")));
        }
        let (nf, kf) = (T::of_usize(n), T::of_usize(k));
        let ratio = T::of_usize(n - k) / nf;
        Ok(Self {
            n,
            k,
            m,
            sigma_n_sq,
            eps,
            alpha: kf / nf,
            beta: T::of_usize(m) / kf,
            sigma_prime_sq: ratio * sigma_n_sq,
            eps_prime: ratio * eps,
            c0: T::of_usize(n - k) / (T::of(4.0) * kf),
            gamma_sq: None,
            mu_sq: None,
            s_norm_sq: None,
            off_support_energy: None,
        })
    }

    /// Sets `γ² = (1/N)‖Σ_{i∈τ∖ξ} s_i a'_i‖²`.
    pub fn with_gamma_sq(mut self, gamma_sq: T) -> Result<Self> {
        self.gamma_sq = Some(check_nonneg("gamma_sq", gamma_sq)?);
        Ok(self)
    }

    /// Sets `μ²(s)` and `‖s‖²`.
    pub fn with_signal(mut self, mu_sq: T, s_norm_sq: T) -> Result<Self> {
        self.mu_sq = Some(check_nonneg("mu_sq", mu_sq)?);
        self.s_norm_sq = Some(check_nonneg("s_norm_sq", s_norm_sq)?);
        Ok(self)
    }

    /// Sets `Σ_{i∈τ∖ξ} |s_i|²`.
    pub fn with_off_support_energy(mut self, energy: T) -> Result<Self> {
        self.off_support_energy = Some(check_nonneg("off_support_energy", energy)?);
        Ok(self)
    }

    pub fn gamma_sq(&self) -> Result<T> {
        self.gamma_sq.ok_or_else(|| missing("gamma_sq"))
    }

    /// `ε̄ = γ² − ε`.
    pub fn eps_bar(&self) -> Result<T> {
        Ok(self.gamma_sq()? - self.eps)
    }

    pub fn mu_sq(&self) -> Result<T> {
        self.mu_sq.ok_or_else(|| missing("mu_sq"))
    }

    pub fn s_norm_sq(&self) -> Result<T> {
        self.s_norm_sq.ok_or_else(|| missing("s_norm_sq"))
    }

    pub fn off_support_energy(&self) -> Result<T> {
        self.off_support_energy.ok_or_else(|| missing("off_support_energy"))
    }

    pub(crate) fn dof(&self) -> T {
        T::of_usize(self.n - self.k)
    }
}

/// `σ_n² Tr[(A_τᵀA_τ)⁻¹]`.
pub fn crb_s<T: Real>(a: &MeasurementMatrix<T>, tau: &SupportSet, sigma_n_sq: T) -> Result<T> {
    check_nonneg("sigma_n_sq", sigma_n_sq)?;
    Ok(sigma_n_sq * ColumnSpan::new(a, tau)?.inverse_gram_trace())
}

/// Large-system limit `α σ_n²` of [`crb_s`].
pub fn crb_s_asymptotic<T: Real>(alpha: T, sigma_n_sq: T) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(alpha * check_nonneg("sigma_n_sq", sigma_n_sq)?)
}

/// Largest admissible `α = K/N` for a given `β = M/K`: `1/(9 + 4 ln(β−1))`.
pub fn alpha_threshold<T: Real>(beta: T) -> Result<T> {
    if !(beta > T::one()) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be > 1, got {beta}")));
    }
    let denom = T::of(9.0) + T::of(4.0) * (beta - T::one()).ln();
    if !(denom > T::zero()) {
        return Err(Error::InvalidParameter(format!("beta={beta} gives a non-positive denominator {denom}")));
    }
    Ok(denom.recip())
}

/// `1 − x/2`, an upper bound on `√(1−x)` for `x ∈ [0,1]`.
pub fn sqrt_one_minus_upper<T: Real>(x: T) -> T {
    T::one() - x / T::of(2.0)
}

/// `−x − x²/2`, an upper bound on `ln(1−x)` for `x ∈ [0,1)`.
pub fn ln_one_minus_upper<T: Real>(x: T) -> T {
    -x - x * x / T::of(2.0)
}
