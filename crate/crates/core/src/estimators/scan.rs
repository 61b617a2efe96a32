//! Exhaustive scan over all `K`-subsets.
//!
//! [`ScanStrategy::Incremental`] walks the lexicographic subset tree depth
//! first and carries the Schur complement of the Gram matrix `AᵀA` (with the
//! projected correlations `Aᵀy` and the residual energy) down the tree, so a
//! leaf costs O(1) and an internal node O((M−p)²). Leaves whose statistic is
//! within rounding distance of a threshold, and the final minimum-residual
//! support, are re-evaluated with the orthogonal factorisation so decisions
//! match [`ScanStrategy::Direct`], which factors every candidate independently.

use crate::ensembles::MeasurementMatrix;
use crate::error::{Error, Result};
use crate::estimators::enumerate::{binomial, enumerate_supports};
use crate::linalg::{dot, norm_sq};
use crate::projections::{ColumnSpan, SupportSet};
use crate::scalar::Real;
use crate::typicality::statistic_from_residual;

/// Default cap on `C(M, K)`.
pub const DEFAULT_BUDGET: u128 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanStrategy {
    Incremental,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanOptions {
    pub budget: u128,
    /// Stop once every threshold has two typical supports. Ignored when the
    /// minimum-residual support is tracked.
    pub early_stop: bool,
    pub strategy: ScanStrategy,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET, early_stop: true, strategy: ScanStrategy::Incremental }
    }
}

impl ScanOptions {
    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_strategy(mut self, strategy: ScanStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_early_stop(mut self, early_stop: bool) -> Self {
        self.early_stop = early_stop;
        self
    }
}

/// Typical supports found for one threshold.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypicalTally {
    pub count: usize,
    /// First typical support in lexicographic order.
    pub first: Option<SupportSet>,
    pub second: Option<SupportSet>,
}

impl TypicalTally {
    fn record(&mut self, support: impl FnOnce() -> SupportSet) {
        self.count += 1;
        match self.count {
            1 => self.first = Some(support()),
            2 => self.second = Some(support()),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutcome<T> {
    /// One tally per threshold, in the order given.
    pub per_eps: Vec<TypicalTally>,
    /// Minimum-residual support and its residual, when tracked.
    pub min_residual: Option<(SupportSet, T)>,
    pub rank_deficient: u64,
    /// Leaves visited, including rank-deficient ones. Less than `C(M,K)` only
    /// after an early stop.
    pub visited: u64,
}

/// Scans every `K`-subset of the columns of `A`, tallying for each `ε` in
/// `eps` the supports with `|(1/N)‖Π⊥y‖² − ((N−K)/N)σ²| < ε`, and optionally
/// tracking the minimum-residual support.
pub fn scan_supports<T: Real>(
    a: &MeasurementMatrix<T>,
    y: &[T],
    k: usize,
    sigma_n_sq: T,
    eps: &[T],
    opts: &ScanOptions,
    track_min: bool,
) -> Result<ScanOutcome<T>> {
    let (n, m) = (a.n(), a.m());
    if y.len() != n {
        return Err(Error::InvalidParameter(format!("measurement vector has length {}, expected N={n}", y.len())));
    }
    if k == 0 || k > m {
        return Err(Error::InvalidParameter(format!("need 1 <= K <= M (K={k}, M={m})")));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!("need K < N (K={k}, N={n})")));
    }
    let count = binomial(m, k);
    if count > opts.budget {
        return Err(Error::BudgetExceeded { count, budget: opts.budget });
    }
    let mut ctx = Context::new(a, y, k, sigma_n_sq, eps, opts, track_min);
    match opts.strategy {
        ScanStrategy::Direct => ctx.run_direct()?,
        ScanStrategy::Incremental => ctx.run_incremental(),
    }
    ctx.finish()
}

struct Context<'a, T> {
    a: &'a MeasurementMatrix<T>,
    y: &'a [T],
    n: usize,
    m: usize,
    k: usize,
    sigma_n_sq: T,
    eps: &'a [T],
    track_min: bool,
    early_stop: bool,
    /// Residual window `[lo, hi]` outside of which no threshold can be met,
    /// already widened by the recheck margin.
    window: (T, T),
    /// Statistic margin inside which the Gram-domain value is re-evaluated.
    margin: T,
    tallies: Vec<TypicalTally>,
    best: Option<(Vec<usize>, T)>,
    rank_deficient: u64,
    visited: u64,
    stopped: bool,
}

impl<'a, T: Real> Context<'a, T> {
    fn new(
        a: &'a MeasurementMatrix<T>,
        y: &'a [T],
        k: usize,
        sigma_n_sq: T,
        eps: &'a [T],
        opts: &ScanOptions,
        track_min: bool,
    ) -> Self {
        let n = a.n();
        let nf = T::of_usize(n);
        let center = T::of_usize(n - k) * sigma_n_sq;
        let energy = norm_sq(y);
        let margin = T::epsilon().sqrt() * (energy + center) / nf + T::epsilon();
        let widest = eps.iter().copied().fold(T::zero(), T::max);
        let window = (nf * (center / nf - widest - margin), nf * (center / nf + widest + margin));
        Self {
            a,
            y,
            n,
            m: a.m(),
            k,
            sigma_n_sq,
            eps,
            track_min,
            early_stop: opts.early_stop && !track_min,
            window,
            margin,
            tallies: vec![TypicalTally::default(); eps.len()],
            best: None,
            rank_deficient: 0,
            visited: 0,
            stopped: false,
        }
    }

    fn finish(self) -> Result<ScanOutcome<T>> {
        let min_residual = match self.best {
            Some((idx, _)) => {
                let support = SupportSet::from_sorted_unchecked(idx);
                let exact = ColumnSpan::new(self.a, &support)?.residual_sq(self.y);
                Some((support, exact))
            }
            None => None,
        };
        Ok(ScanOutcome {
            per_eps: self.tallies,
            min_residual,
            rank_deficient: self.rank_deficient,
            visited: self.visited,
        })
    }

    fn all_ambiguous(&self) -> bool {
        !self.tallies.is_empty() && self.tallies.iter().all(|t| t.count >= 2)
    }

    fn run_direct(&mut self) -> Result<()> {
        for support in enumerate_supports(self.m, self.k)? {
            self.visited += 1;
            let span = match ColumnSpan::new(self.a, &support) {
                Ok(span) => span,
                Err(Error::RankDeficient { .. }) => {
                    self.rank_deficient += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let r = span.residual_sq(self.y);
            let stat = statistic_from_residual(r, self.n, self.k, self.sigma_n_sq);
            for (tally, &eps) in self.tallies.iter_mut().zip(self.eps) {
                if stat < eps {
                    tally.record(|| support.clone());
                }
            }
            if self.track_min && self.best.as_ref().is_none_or(|(_, b)| r < *b) {
                self.best = Some((support.indices().to_vec(), r));
            }
            if self.early_stop && self.all_ambiguous() {
                break;
            }
        }
        Ok(())
    }

    fn run_incremental(&mut self) {
        let (m, k) = (self.m, self.k);
        let cols: Vec<Vec<T>> = (0..m).map(|j| self.a.column(j)).collect();
        let mut root = Level::new(m);
        for i in 0..m {
            for j in i..m {
                root.gram[i * m + j] = dot(&cols[i], &cols[j]);
            }
            root.b[i] = dot(&cols[i], self.y);
        }
        root.energy = norm_sq(self.y);
        let diag0: Vec<T> = (0..m).map(|i| root.gram[i * m + i]).collect();
        // Relative pivot (squared sine to the span of the prefix) below which
        // a column is treated as dependent.
        let pivot_tol = T::of(64.0) * T::of_usize(self.n) * T::epsilon();

        let mut levels: Vec<Level<T>> = Vec::with_capacity(k);
        levels.push(root);
        for _ in 1..k {
            levels.push(Level::new(m));
        }
        let mut prefix = Vec::with_capacity(k);
        self.descend(&mut levels, &diag0, pivot_tol, 0, 0, &mut prefix);
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &mut self,
        levels: &mut [Level<T>],
        diag0: &[T],
        pivot_tol: T,
        depth: usize,
        start: usize,
        prefix: &mut Vec<usize>,
    ) {
        let (m, k) = (self.m, self.k);
        let last_start = m - (k - depth);
        for p in start..=last_start {
            if self.stopped {
                return;
            }
            let (head, tail) = levels.split_at_mut(depth + 1);
            let cur = &head[depth];
            let piv = cur.gram[p * m + p];
            let dependent = !(piv > pivot_tol * diag0[p]);

            if depth + 1 == k {
                self.visited += 1;
                prefix.push(p);
                if dependent {
                    self.rank_deficient += 1;
                } else {
                    let r = cur.energy - cur.b[p] * cur.b[p] / piv;
                    self.leaf(prefix, r);
                }
                prefix.pop();
                continue;
            }

            if dependent {
                let skipped = binomial(m - 1 - p, k - depth - 1) as u64;
                self.rank_deficient += skipped;
                self.visited += skipped;
                continue;
            }

            let next = &mut tail[0];
            let bp = cur.b[p];
            next.energy = cur.energy - bp * bp / piv;
            let diag_only = depth + 2 == k;
            for i in (p + 1)..m {
                let gip = cur.gram[p * m + i];
                let f = gip / piv;
                next.b[i] = cur.b[i] - f * bp;
                if diag_only {
                    next.gram[i * m + i] = cur.gram[i * m + i] - f * gip;
                } else {
                    let row_cur = &cur.gram[i * m..(i + 1) * m];
                    let row_p = &cur.gram[p * m..(p + 1) * m];
                    let row_next = &mut next.gram[i * m..(i + 1) * m];
                    for j in i..m {
                        row_next[j] = row_cur[j] - f * row_p[j];
                    }
                }
            }
            prefix.push(p);
            self.descend(levels, diag0, pivot_tol, depth + 1, p + 1, prefix);
            prefix.pop();
        }
    }

    fn leaf(&mut self, prefix: &[usize], r: T) {
        if self.track_min && self.best.as_ref().is_none_or(|(_, b)| r < *b) {
            self.best = Some((prefix.to_vec(), r));
        }
        if self.eps.is_empty() || r < self.window.0 || r > self.window.1 {
            return;
        }
        let mut stat = statistic_from_residual(r, self.n, self.k, self.sigma_n_sq);
        let near = self.eps.iter().any(|&e| (stat - e).abs() <= self.margin);
        if near {
            let support = SupportSet::from_sorted_unchecked(prefix.to_vec());
            match ColumnSpan::new(self.a, &support) {
                Ok(span) => {
                    let exact = span.residual_sq(self.y);
                    stat = statistic_from_residual(exact, self.n, self.k, self.sigma_n_sq);
                }
                Err(_) => {
                    self.rank_deficient += 1;
                    return;
                }
            }
        }
        for (tally, &eps) in self.tallies.iter_mut().zip(self.eps) {
            if stat < eps {
                tally.record(|| SupportSet::from_sorted_unchecked(prefix.to_vec()));
            }
        }
        if self.early_stop && self.all_ambiguous() {
            self.stopped = true;
        }
    }
}

struct Level<T> {
    /// Upper triangle (row-major, `i <= j`) of the Schur complement.
    gram: Vec<T>,
    b: Vec<T>,
    energy: T,
}

impl<T: Real> Level<T> {
    fn new(m: usize) -> Self {
        Self { gram: vec![T::zero(); m * m], b: vec![T::zero(); m], energy: T::zero() }
    }
}
