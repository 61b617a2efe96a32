//! Random measurement-matrix ensembles that satisfy the scaled
//! concentration-of-measure inequality
//! `P{ |‖Ax‖² − N‖x‖²| ≥ εN‖x‖² } ≤ 2·exp(−N c₀(ε))`,
//! plus empirical probes of that inequality.
//!
//! Entries are unit-variance (not `1/N`), so every column has expected squared
//! norm `N`.
//!
//! # Reproducibility
//!
//! Column `j` of a matrix sampled with `seed` is the prefix of ChaCha8 stream
//! number `j` keyed by `seed`: entry `(i, j)` is the `i`-th draw of that stream.
//! The matrix is therefore a pure function of `(kind, N, M, seed)`, and any
//! subset of columns can be regenerated without materialising the rest.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::rng::{derive_seed, Stream};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnsembleKind {
    /// i.i.d. `N(0, 1)`.
    GaussianUnit,
    /// i.i.d. `±1` with probability 1/2 each.
    Rademacher,
    /// i.i.d. `+√3, 0, −√3` with probabilities 1/6, 2/3, 1/6.
    SparseTernary,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 3] =
        [EnsembleKind::GaussianUnit, EnsembleKind::Rademacher, EnsembleKind::SparseTernary];

    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::GaussianUnit => "gaussian",
            EnsembleKind::Rademacher => "rademacher",
            EnsembleKind::SparseTernary => "ternary",
        }
    }

    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            EnsembleKind::GaussianUnit => rng.sample(StandardNormal),
            EnsembleKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EnsembleKind::SparseTernary => match rng.random_range(0u32..6) {
                0 => 3f64.sqrt(),
                1 => -(3f64.sqrt()),
                _ => 0.0,
            },
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "gaussianunit" | "normal" => Ok(EnsembleKind::GaussianUnit),
            "rademacher" | "bernoulli" => Ok(EnsembleKind::Rademacher),
            "ternary" | "sparseternary" | "achlioptas" => Ok(EnsembleKind::SparseTernary),
            other => Err(Error::InvalidParameter(format!(
                "unknown ensemble `{other}` (expected gaussian, rademacher or ternary)"
            ))),
        }
    }
}

/// Where a measurement matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixSource {
    Sampled {
        kind: EnsembleKind,
        seed: u64,
    },
    /// Injected by the caller (tests, structured instances).
    Synthetic,
}

/// `N x M` measurement matrix `A = [a_1 … a_M]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix<T> {
    entries: Matrix<T>,
    source: MatrixSource,
}

impl<T: Real> MeasurementMatrix<T> {
    /// Wraps caller-provided entries. All entries must be finite.
    pub fn synthetic(entries: Matrix<T>) -> Result<Self> {
        if entries.rows() == 0 || entries.cols() == 0 {
            return Err(Error::InvalidParameter("matrix must be at least 1x1".into()));
        }
        if entries.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        Ok(Self { entries, source: MatrixSource::Synthetic })
    }

    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    pub fn m(&self) -> usize {
        self.entries.cols()
    }

    pub fn entries(&self) -> &Matrix<T> {
        &self.entries
    }

    pub fn source(&self) -> MatrixSource {
        self.source
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.entries.column(j)
    }

    /// `A x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        self.entries.mul_vec(x)
    }

    /// Same matrix with every entry multiplied by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self { entries: self.entries.scale(c), source: MatrixSource::Synthetic }
    }
}

fn validate_dims(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!("N and M must be positive (got N={n}, M={m})")));
    }
    Ok(())
}

/// Column `j` of the matrix `sample_matrix(kind, n, _, seed)` would produce.
pub fn sample_column<T: Real>(kind: EnsembleKind, n: usize, j: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(j as u64);
    (0..n).map(|_| T::of(kind.draw(&mut rng))).collect()
}

/// Draws an `N x M` matrix with i.i.d. entries from `kind`.
pub fn sample_matrix<T: Real>(kind: EnsembleKind, n: usize, m: usize, seed: u64) -> Result<MeasurementMatrix<T>> {
    validate_dims(n, m)?;
    let columns: Vec<Vec<T>> = (0..m).map(|j| sample_column(kind, n, j, seed)).collect();
    let entries = Matrix::from_columns(n, &columns)?;
    Ok(MeasurementMatrix { entries, source: MatrixSource::Sampled { kind, seed } })
}

/// Fraction of `trials` independently sampled matrices for which
/// `|‖Ax‖² − N‖x‖²| ≥ ε N ‖x‖²`.
///
/// Trial `t` uses the matrix seeded by `derive_seed(seed, t, Matrix)`; only the
/// columns on the support of `x` are generated.
pub fn concentration_violation_rate<T: Real>(
    kind: EnsembleKind,
    n: usize,
    m: usize,
    x: &[T],
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    validate_dims(n, m)?;
    if x.len() != m {
        return Err(Error::InvalidParameter(format!("x has length {}, expected M={m}", x.len())));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0,1), got {eps}")));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let x_norm_sq = dot(x, x);
    if x_norm_sq == T::zero() {
        return Err(Error::InvalidParameter("x must be nonzero".into()));
    }
    let support: Vec<usize> = (0..m).filter(|&j| x[j] != T::zero()).collect();
    let expected = T::of_usize(n) * x_norm_sq;
    let threshold = T::of(eps) * expected;

    let violations: usize = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mseed = derive_seed(seed, t, Stream::Matrix);
            let mut ax = vec![T::zero(); n];
            for &j in &support {
                let col: Vec<T> = sample_column(kind, n, j, mseed);
                for (acc, c) in ax.iter_mut().zip(col) {
                    *acc += c * x[j];
                }
            }
            usize::from((dot(&ax, &ax) - expected).abs() >= threshold)
        })
        .sum();
    Ok(violations as f64 / trials as f64)
}

/// Normalised column Gram summary: entries `(1/N) a_iᵀ a_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramStats<T> {
    /// `max_{i≠j} |(1/N) a_iᵀ a_j|`.
    pub max_offdiag: T,
    pub diag_min: T,
    pub diag_max: T,
}

pub fn column_gram_stats<T: Real>(a: &MeasurementMatrix<T>) -> Result<GramStats<T>> {
    let (n, m) = (a.n(), a.m());
    if m < 2 {
        return Err(Error::InvalidParameter("column_gram_stats needs M >= 2".into()));
    }
    let cols: Vec<Vec<T>> = (0..m).map(|j| a.column(j)).collect();
    let inv_n = T::one() / T::of_usize(n);
    let mut stats = GramStats { max_offdiag: T::zero(), diag_min: T::infinity(), diag_max: T::neg_infinity() };
    for i in 0..m {
        let d = dot(&cols[i], &cols[i]) * inv_n;
        stats.diag_min = stats.diag_min.min(d);
        stats.diag_max = stats.diag_max.max(d);
        for j in (i + 1)..m {
            let g = (dot(&cols[i], &cols[j]) * inv_n).abs();
            stats.max_offdiag = stats.max_offdiag.max(g);
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    #[test]
    fn rademacher_entries_and_column_norms() {
        let a = sample_matrix::<f64>(EnsembleKind::Rademacher, 4, 2, 7).unwrap();
        assert!(a.entries().as_slice().iter().all(|&v| v == 1.0 || v == -1.0));
        for j in 0..2 {
            assert_eq!(dot(&a.column(j), &a.column(j)), 4.0);
        }
    }

    #[test]
    fn ternary_zero_fraction() {
        let a = sample_matrix::<f64>(EnsembleKind::SparseTernary, 1000, 1000, 3).unwrap();
        let zeros = a.entries().as_slice().iter().filter(|&&v| v == 0.0).count();
        let frac = zeros as f64 / 1e6;
        assert!((frac - 2.0 / 3.0).abs() < 0.01 * 2.0 / 3.0, "zero fraction {frac}");
        let s3 = 3f64.sqrt();
        assert!(a.entries().as_slice().iter().all(|&v| v == 0.0 || v == s3 || v == -s3));
    }

    #[test]
    fn gaussian_column_norm_ratio() {
        let a = sample_matrix::<f64>(EnsembleKind::GaussianUnit, 1000, 1, 1).unwrap();
        let r = dot(&a.column(0), &a.column(0)) / 1000.0;
        assert!((0.8..=1.2).contains(&r), "ratio {r}");
    }

    #[test]
    fn moments_within_tolerance() {
        for kind in EnsembleKind::ALL {
            let a = sample_matrix::<f64>(kind, 1000, 1000, 11).unwrap();
            let v = a.entries().as_slice();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            assert!(mean.abs() <= 4.0 / n.sqrt(), "{kind}: mean {mean}");
            assert!((var - 1.0).abs() <= 0.05, "{kind}: var {var}");
        }
    }

    #[test]
    fn sampling_is_deterministic_and_columnwise() {
        for kind in EnsembleKind::ALL {
            let a = sample_matrix::<f64>(kind, 17, 5, 99).unwrap();
            let b = sample_matrix::<f64>(kind, 17, 5, 99).unwrap();
            assert_eq!(a, b);
            let c3: Vec<f64> = sample_column(kind, 17, 3, 99);
            assert_eq!(c3, a.column(3));
            // Wider matrices share leading columns.
            let wide = sample_matrix::<f64>(kind, 17, 9, 99).unwrap();
            assert_eq!(wide.column(4), a.column(4));
        }
    }

    #[test]
    fn rejects_empty_dimensions() {
        assert!(sample_matrix::<f64>(EnsembleKind::GaussianUnit, 0, 3, 1).is_err());
        assert!(sample_matrix::<f64>(EnsembleKind::GaussianUnit, 3, 0, 1).is_err());
    }

    #[test]
    fn rademacher_unit_vector_never_violates() {
        let mut x = vec![0.0; 4];
        x[0] = 1.0;
        for eps in [1e-6, 0.1, 0.9] {
            let r = concentration_violation_rate(EnsembleKind::Rademacher, 50, 4, &x, eps, 500, 5).unwrap();
            assert_eq!(r, 0.0);
        }
    }

    #[test]
    fn violation_rate_nested_in_eps() {
        let x = vec![1.0, -0.5, 0.25, 2.0];
        let r1 = concentration_violation_rate(EnsembleKind::GaussianUnit, 32, 4, &x, 0.1, 2000, 8).unwrap();
        let r2 = concentration_violation_rate(EnsembleKind::GaussianUnit, 32, 4, &x, 0.3, 2000, 8).unwrap();
        assert!(r1 >= r2);
    }

    #[test]
    fn violation_rate_gaussian_small() {
        let x = vec![1.0; 4];
        let r = concentration_violation_rate(EnsembleKind::GaussianUnit, 100, 4, &x, 0.5, 10_000, 1).unwrap();
        // Gaussian tail bound 2 exp(−N(ε²/4 − ε³/6)).
        let bound = 2.0 * (-100.0 * (0.25f64 * 0.25 - 0.125 / 6.0)).exp();
        assert!(r <= bound, "rate {r} vs {bound}");
    }

    #[test]
    fn violation_rate_decays_with_n() {
        let x = vec![1.0, 1.0, -1.0, 0.5];
        for kind in EnsembleKind::ALL {
            let r64 = concentration_violation_rate(kind, 64, 4, &x, 0.2, 10_000, 2).unwrap();
            let r256 = concentration_violation_rate(kind, 256, 4, &x, 0.2, 10_000, 2).unwrap();
            assert!(r256 <= r64, "{kind}: {r256} > {r64}");
        }
    }

    #[test]
    fn violation_rate_rejects_zero_vector() {
        let x = vec![0.0; 3];
        assert!(concentration_violation_rate(EnsembleKind::GaussianUnit, 8, 3, &x, 0.5, 10, 1).is_err());
    }

    #[test]
    fn gram_stats_identity_block() {
        let n = 9;
        let s = (n as f64).sqrt();
        let mut e = Matrix::zeros(n, 3);
        for j in 0..3 {
            e[(j, j)] = s;
        }
        let a = MeasurementMatrix::synthetic(e).unwrap();
        let g = column_gram_stats(&a).unwrap();
        assert!((g.diag_min - 1.0).abs() < 1e-15 && (g.diag_max - 1.0).abs() < 1e-15);
        assert_eq!(g.max_offdiag, 0.0);
    }

    #[test]
    fn gram_stats_rademacher_diag_exact() {
        let a = sample_matrix::<f64>(EnsembleKind::Rademacher, 64, 8, 4).unwrap();
        let g = column_gram_stats(&a).unwrap();
        assert_eq!((g.diag_min, g.diag_max), (1.0, 1.0));
    }

    #[test]
    fn gram_offdiag_shrinks_with_n() {
        for kind in EnsembleKind::ALL {
            let med = |n: usize| {
                median(
                    (0..100)
                        .map(|s| {
                            let a = sample_matrix::<f64>(kind, n, 32, s).unwrap();
                            column_gram_stats(&a).unwrap().max_offdiag
                        })
                        .collect(),
                )
            };
            let (small, large) = (med(256), med(4096));
            assert!(large < small, "{kind}: {large} !< {small}");
        }
    }

    #[test]
    fn gram_stats_needs_two_columns() {
        let a = sample_matrix::<f64>(EnsembleKind::GaussianUnit, 4, 1, 0).unwrap();
        assert!(column_gram_stats(&a).is_err());
    }
}
