//! Estimators of a sparse signal from `y = A s + n`:
//!
//! * [`slse`], least squares restricted to a known support (genie-aided);
//! * [`joint_typicality_estimate`], which scans every `K`-subset and keeps the
//!   unique jointly typical one;
//! * [`exhaustive_ml_oracle`], the minimum-residual support, which is the
//!   maximum-likelihood support under white Gaussian noise.

mod enumerate;
mod scan;

pub use enumerate::{binomial, enumerate_supports, SupportEnumerator};
pub use scan::{scan_supports, ScanOptions, ScanOutcome, ScanStrategy, TypicalTally, DEFAULT_BUDGET};

use crate::ensembles::MeasurementMatrix;
use crate::error::{Error, Result};
use crate::projections::{ColumnSpan, SupportSet};
use crate::scalar::Real;
use crate::typicality::TypicalityParams;

/// Length-`M` signal with exactly `K` nonzero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal<T> {
    values: Vec<T>,
    support: SupportSet,
    mu: T,
}

impl<T: Real> SparseSignal<T> {
    /// Derives the support and minimum magnitude from `values`. At least one
    /// entry must be nonzero and all entries finite.
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("signal entries must be finite".into()));
        }
        let idx: Vec<usize> = (0..values.len()).filter(|&i| values[i] != T::zero()).collect();
        if idx.is_empty() {
            return Err(Error::InvalidParameter("signal must have at least one nonzero".into()));
        }
        let mu = idx.iter().map(|&i| values[i].abs()).fold(T::infinity(), T::min);
        Ok(Self { values, support: SupportSet::from_sorted_unchecked(idx), mu })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    /// `μ(s) = min_{i∈τ} |s_i|`.
    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn k(&self) -> usize {
        self.support.k()
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    /// `s_τ`, the nonzero taps in support order.
    pub fn taps(&self) -> Vec<T> {
        self.support.indices().iter().map(|&i| self.values[i]).collect()
    }

    pub fn norm_sq(&self) -> T {
        self.values.iter().map(|&v| v * v).sum()
    }

    /// `Σ_{i ∈ τ∖ξ} s_i²`.
    pub fn energy_outside(&self, xi: &SupportSet) -> T {
        self.support.difference(xi).iter().map(|&i| self.values[i] * self.values[i]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Unique,
    NoneTypical,
    Ambiguous,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Unique => "unique",
            Outcome::NoneTypical => "none_typical",
            Outcome::Ambiguous => "ambiguous",
        }
    }

    pub(crate) fn from_count(count: usize) -> Self {
        match count {
            0 => Outcome::NoneTypical,
            1 => Outcome::Unique,
            _ => Outcome::Ambiguous,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult<T> {
    /// Length-`M` estimate; all zeros unless the outcome is `Unique`.
    pub estimate: Vec<T>,
    pub detected_support: Option<SupportSet>,
    /// Number of typical supports found. With early stopping enabled the scan
    /// halts at the second hit, so `Ambiguous` results report 2.
    pub typical_count: usize,
    pub outcome: Outcome,
    /// Candidate supports skipped because `A_ζ` was numerically rank-deficient.
    pub rank_deficient_skipped: u64,
}

/// `(A_τᵀA_τ)⁻¹A_τᵀ y`, in the order of `τ`.
pub fn slse<T: Real>(a: &MeasurementMatrix<T>, tau: &SupportSet, y: &[T]) -> Result<Vec<T>> {
    if y.len() != a.n() {
        return Err(Error::InvalidParameter(format!(
            "measurement vector has length {}, expected N={}",
            y.len(),
            a.n()
        )));
    }
    Ok(ColumnSpan::new(a, tau)?.least_squares(y))
}

/// Places support-ordered `coeffs` into a length-`m` vector.
pub fn embed<T: Real>(support: &SupportSet, coeffs: &[T], m: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m];
    for (&i, &c) in support.indices().iter().zip(coeffs) {
        out[i] = c;
    }
    out
}

/// Runs the joint typicality estimator with the default scan options.
pub fn joint_typicality_estimate<T: Real>(
    a: &MeasurementMatrix<T>,
    y: &[T],
    k: usize,
    params: &TypicalityParams<T>,
) -> Result<EstimateResult<T>> {
    joint_typicality_estimate_with(a, y, k, params, &ScanOptions::default())
}

pub fn joint_typicality_estimate_with<T: Real>(
    a: &MeasurementMatrix<T>,
    y: &[T],
    k: usize,
    params: &TypicalityParams<T>,
    opts: &ScanOptions,
) -> Result<EstimateResult<T>> {
    let scan = scan_supports(a, y, k, params.sigma_n_sq, &[params.eps], opts, false)?;
    estimate_from_tally(a, y, &scan.per_eps[0], scan.rank_deficient)
}

/// Turns one threshold's tally into an [`EstimateResult`], running SLSE on the
/// detected support when it is unique.
pub fn estimate_from_tally<T: Real>(
    a: &MeasurementMatrix<T>,
    y: &[T],
    tally: &TypicalTally,
    rank_deficient_skipped: u64,
) -> Result<EstimateResult<T>> {
    let outcome = Outcome::from_count(tally.count);
    let (estimate, detected_support) = match (outcome, &tally.first) {
        (Outcome::Unique, Some(zeta)) => {
            let coeffs = slse(a, zeta, y)?;
            (embed(zeta, &coeffs, a.m()), Some(zeta.clone()))
        }
        _ => (vec![T::zero(); a.m()], None),
    };
    Ok(EstimateResult { estimate, detected_support, typical_count: tally.count, outcome, rank_deficient_skipped })
}

/// Minimum-residual `K`-subset (ties broken lexicographically) with its SLSE
/// coefficients.
pub fn exhaustive_ml_oracle<T: Real>(a: &MeasurementMatrix<T>, y: &[T], k: usize) -> Result<(SupportSet, Vec<T>)> {
    exhaustive_ml_oracle_with(a, y, k, &ScanOptions::default())
}

pub fn exhaustive_ml_oracle_with<T: Real>(
    a: &MeasurementMatrix<T>,
    y: &[T],
    k: usize,
    opts: &ScanOptions,
) -> Result<(SupportSet, Vec<T>)> {
    let scan = scan_supports(a, y, k, T::zero(), &[], opts, true)?;
    let (support, _) = scan.min_residual.ok_or(Error::RankDeficient { rank: 0, required: k })?;
    let coeffs = slse(a, &support, y)?;
    Ok((support, coeffs))
}

#[cfg(test)]
mod tests;
