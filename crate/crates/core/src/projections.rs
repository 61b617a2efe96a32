//! Orthogonal projections against column spans of `A`.
//!
//! For a support `ξ`, `Π⊥_ξ = I − A_ξ(A_ξᵀA_ξ)⁻¹A_ξᵀ`. Residuals are computed
//! from a column-pivoted Householder factorisation `A_ξ P = Q R`. The trailing
//! `N − K` columns of `Q` span the unit-eigenvalue eigenspace of `Π⊥_ξ`, so
//! `U_ξ = [Q_{K..N} | Q_{0..K}]` is an eigendecomposition with the unit
//! eigenvalues first and the rotated columns are `a'_i = (Qᵀ a_i)_{K..N}`.

use std::fmt;

use crate::ensembles::MeasurementMatrix;
use crate::error::{Error, Result};
use crate::estimators::SparseSignal;
use crate::linalg::{norm_sq, Matrix, PivotedQr};
use crate::scalar::Real;

/// Sorted set of distinct column indices (0-based) of cardinality `K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    /// Validates `indices` as a strictly increasing subset of `0..m`.
    pub fn new(indices: Vec<usize>, m: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!("support indices must be strictly increasing: {indices:?}")));
        }
        if let Some(&last) = indices.last() {
            if last >= m {
                return Err(Error::InvalidParameter(format!("support index {} out of range for M={m}", last + 1)));
            }
        }
        Ok(Self { indices })
    }

    /// Builds a support from unsorted indices, sorting them first.
    pub fn from_unsorted(mut indices: Vec<usize>, m: usize) -> Result<Self> {
        indices.sort_unstable();
        Self::new(indices, m)
    }

    /// Parses 1-based indices, the convention used on the command line.
    pub fn from_one_based(indices: &[usize], m: usize) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::InvalidParameter("1-based support index 0 is invalid".into()));
        }
        Self::from_unsorted(indices.iter().map(|i| i - 1).collect(), m)
    }

    /// `{0, …, k-1}`.
    pub fn first(k: usize) -> Self {
        Self { indices: (0..k).collect() }
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self { indices }
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Indices of `self` not in `other`, ascending.
    pub fn difference(&self, other: &SupportSet) -> Vec<usize> {
        self.indices.iter().copied().filter(|&i| !other.contains(i)).collect()
    }

    /// Replaces the largest index with the smallest index in `0..m` outside
    /// the set, giving a support that differs from `self` in exactly one
    /// position. `None` when `K == M`.
    pub fn swap_last(&self, m: usize) -> Option<SupportSet> {
        let outside = (0..m).find(|i| !self.contains(*i))?;
        let mut idx = self.indices.clone();
        idx.pop();
        idx.push(outside);
        idx.sort_unstable();
        Some(SupportSet { indices: idx })
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Display for SupportSet {
    /// 1-based, e.g. `{1,4,7}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

fn check_support<T: Real>(a: &MeasurementMatrix<T>, xi: &SupportSet) -> Result<()> {
    match xi.indices().last() {
        Some(&last) if last >= a.m() => {
            Err(Error::InvalidParameter(format!("support index {} out of range for M={}", last + 1, a.m())))
        }
        _ => Ok(()),
    }
}

/// Columns of `A` at `ξ`, order preserved.
pub fn submatrix<T: Real>(a: &MeasurementMatrix<T>, xi: &SupportSet) -> Result<Matrix<T>> {
    check_support(a, xi)?;
    let cols: Vec<Vec<T>> = xi.indices().iter().map(|&j| a.column(j)).collect();
    Matrix::from_columns(a.n(), &cols)
}

/// Factorisation of `A_ξ`, reusable across many right-hand sides.
#[derive(Debug, Clone)]
pub struct ColumnSpan<T> {
    qr: PivotedQr<T>,
}

impl<T: Real> ColumnSpan<T> {
    /// Factors `A_ξ`; fails with [`Error::RankDeficient`] when its numerical
    /// rank is below `K`.
    pub fn new(a: &MeasurementMatrix<T>, xi: &SupportSet) -> Result<Self> {
        check_support(a, xi)?;
        if xi.k() > a.n() {
            return Err(Error::RankDeficient { rank: a.n(), required: xi.k() });
        }
        let cols: Vec<Vec<T>> = xi.indices().iter().map(|&j| a.column(j)).collect();
        let qr = PivotedQr::new(a.n(), &cols);
        qr.require_full_rank()?;
        Ok(Self { qr })
    }

    pub fn n(&self) -> usize {
        self.qr.nrows()
    }

    pub fn k(&self) -> usize {
        self.qr.ncols()
    }

    /// `‖Π⊥ y‖²`.
    pub fn residual_sq(&self, y: &[T]) -> T {
        self.qr.residual_sq(y)
    }

    /// `(U_ξᵀ v)_{N−K}`: coordinates of `Π⊥ v` in the unit-eigenvalue basis.
    pub fn rotate(&self, v: &[T]) -> Vec<T> {
        let mut z = v.to_vec();
        self.qr.apply_qt(&mut z);
        z.split_off(self.k())
    }

    /// `(A_ξᵀA_ξ)⁻¹A_ξᵀ y`, in the order of `ξ`.
    pub fn least_squares(&self, y: &[T]) -> Vec<T> {
        self.qr.solve_least_squares(y)
    }

    /// `Trace[(A_ξᵀA_ξ)⁻¹]`.
    pub fn inverse_gram_trace(&self) -> T {
        self.qr.inverse_gram_trace()
    }
}

/// `‖Π⊥_{A_ξ} y‖²`, the least-squares residual `min_x ‖y − A_ξ x‖²`.
pub fn residual_sq_norm<T: Real>(a: &MeasurementMatrix<T>, xi: &SupportSet, y: &[T]) -> Result<T> {
    check_len(a, y)?;
    Ok(ColumnSpan::new(a, xi)?.residual_sq(y))
}

/// `a'_i = (U_ξᵀ a_i)_{N−K}` for every column `i` of `A`.
pub fn rotated_columns<T: Real>(a: &MeasurementMatrix<T>, xi: &SupportSet) -> Result<Vec<Vec<T>>> {
    if xi.k() >= a.n() {
        return Err(Error::InvalidParameter(format!("rotated columns need K < N (K={}, N={})", xi.k(), a.n())));
    }
    let span = ColumnSpan::new(a, xi)?;
    Ok((0..a.m()).map(|i| span.rotate(&a.column(i))).collect())
}

/// `γ² = (1/N) Σ_{i,j ∈ τ∖ξ} s_i s_j a'_iᵀ a'_j`, the per-measurement energy of
/// the true signal left outside `span(A_ξ)`.
pub fn gamma_sq<T: Real>(a: &MeasurementMatrix<T>, xi: &SupportSet, s: &SparseSignal<T>) -> Result<T> {
    if s.m() != a.m() {
        return Err(Error::InvalidParameter(format!("signal length {} does not match M={}", s.m(), a.m())));
    }
    if xi.k() >= a.n() {
        return Err(Error::InvalidParameter("gamma_sq needs K < N".into()));
    }
    let diff = s.support().difference(xi);
    if diff.is_empty() {
        return Ok(T::zero());
    }
    let span = ColumnSpan::new(a, xi)?;
    let mut acc = vec![T::zero(); a.n() - xi.k()];
    for i in diff {
        let rot = span.rotate(&a.column(i));
        let si = s.values()[i];
        for (o, r) in acc.iter_mut().zip(rot) {
            *o += si * r;
        }
    }
    Ok(norm_sq(&acc) / T::of_usize(a.n()))
}

fn check_len<T: Real>(a: &MeasurementMatrix<T>, y: &[T]) -> Result<()> {
    if y.len() != a.n() {
        return Err(Error::InvalidParameter(format!(
            "measurement vector has length {}, expected N={}",
            y.len(),
            a.n()
        )));
    }
    Ok(())
}
