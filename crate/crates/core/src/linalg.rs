//! Small dense linear algebra: a row-major matrix type, column-pivoted
//! Householder QR, and one-sided Jacobi singular values.
//!
//! Everything here is sized for desk-scale problems (N up to a few thousand,
//! K up to a few dozen) and is written against [`Real`] so both `f32` and
//! `f64` instantiations share one code path.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data. Fails when the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::InvalidParameter(format!("column {j} has length {}, expected {rows}", c.len())));
            }
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "mul_vec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ x`.
    pub fn tr_mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.rows, x.len(), "tr_mul_vec dimension mismatch");
        let mut out = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn scale(&self, c: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * c).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Gauss-Jordan inverse with partial pivoting. Used for oracle checks and
    /// small Gram matrices only.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::InvalidParameter("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[(i, c)].abs().partial_cmp(&a[(j, c)].abs()).unwrap()).unwrap();
            if a[(p, c)] == T::zero() {
                return Err(Error::RankDeficient { rank: c, required: n });
            }
            if p != c {
                for j in 0..n {
                    a.data.swap(p * n + j, c * n + j);
                    inv.data.swap(p * n + j, c * n + j);
                }
            }
            let piv = a[(c, c)];
            for j in 0..n {
                a[(c, j)] /= piv;
                inv[(c, j)] /= piv;
            }
            for i in 0..n {
                if i == c {
                    continue;
                }
                let f = a[(i, c)];
                if f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let ac = a[(c, j)];
                    let ic = inv[(c, j)];
                    a[(i, j)] -= f * ac;
                    inv[(i, j)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm_sq<T: Real>(a: &[T]) -> T {
    dot(a, a)
}

/// Column-pivoted Householder QR of a tall `n x k` matrix given by columns.
///
/// `A P = Q R` with `Q = H_0 H_1 … H_{k-1}`; reflectors are kept implicitly.
#[derive(Debug, Clone)]
pub struct PivotedQr<T> {
    n: usize,
    k: usize,
    /// Householder vectors; `reflectors[j]` has length `n - j`.
    reflectors: Vec<Vec<T>>,
    betas: Vec<T>,
    /// `k x k` upper-triangular factor, row-major.
    r: Matrix<T>,
    /// `perm[j]` is the original column placed at position `j`.
    perm: Vec<usize>,
}

impl<T: Real> PivotedQr<T> {
    pub fn new(n: usize, columns: &[Vec<T>]) -> Self {
        let k = columns.len();
        let mut work: Vec<Vec<T>> = columns.to_vec();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut reflectors = Vec::with_capacity(k);
        let mut betas = Vec::with_capacity(k);
        let mut r = Matrix::zeros(k, k);

        for j in 0..k.min(n) {
            // Pivot on the largest remaining trailing norm.
            let p =
                (j..k).max_by(|&a, &b| norm_sq(&work[a][j..]).partial_cmp(&norm_sq(&work[b][j..])).unwrap()).unwrap();
            work.swap(j, p);
            perm.swap(j, p);
            for row in 0..j {
                let tmp = r[(row, j)];
                r[(row, j)] = r[(row, p)];
                r[(row, p)] = tmp;
            }

            let x = &work[j][j..];
            let xnorm = norm_sq(x).sqrt();
            let alpha = if x[0] >= T::zero() { -xnorm } else { xnorm };
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vtv = norm_sq(&v);
            let beta = if vtv > T::zero() { T::of(2.0) / vtv } else { T::zero() };
            r[(j, j)] = if beta == T::zero() { x[0] } else { alpha };

            for l in (j + 1)..k {
                let col = &mut work[l][j..];
                let w = beta * dot(&v, col);
                for (c, &vi) in col.iter_mut().zip(&v) {
                    *c -= w * vi;
                }
                r[(j, l)] = col[0];
            }
            reflectors.push(v);
            betas.push(beta);
        }

        Self { n, k, reflectors, betas, r, perm }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> &Matrix<T> {
        &self.r
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Computes `Qᵀ y` in place.
    pub fn apply_qt(&self, y: &mut [T]) {
        for (j, (v, &beta)) in self.reflectors.iter().zip(&self.betas).enumerate() {
            let seg = &mut y[j..];
            let w = beta * dot(v, seg);
            for (s, &vi) in seg.iter_mut().zip(v) {
                *s -= w * vi;
            }
        }
    }

    /// Computes `Q z` in place.
    pub fn apply_q(&self, z: &mut [T]) {
        for (j, (v, &beta)) in self.reflectors.iter().zip(&self.betas).enumerate().rev() {
            let seg = &mut z[j..];
            let w = beta * dot(v, seg);
            for (s, &vi) in seg.iter_mut().zip(v) {
                *s -= w * vi;
            }
        }
    }

    /// Singular values of `R` (hence of the factored matrix), descending.
    pub fn singular_values(&self) -> Vec<T> {
        let cols: Vec<Vec<T>> = (0..self.k).map(|j| self.r.column(j)).collect();
        jacobi_singular_values(cols)
    }

    /// Numerical rank: singular values at or below `σ_max · n · ε` count as zero.
    pub fn rank(&self) -> usize {
        let sv = self.singular_values();
        let Some(&smax) = sv.first() else { return 0 };
        let tol = smax * T::of_usize(self.n) * T::epsilon();
        sv.iter().filter(|&&s| s > tol).count()
    }

    pub fn require_full_rank(&self) -> Result<()> {
        let rank = self.rank();
        if rank < self.k {
            return Err(Error::RankDeficient { rank, required: self.k });
        }
        Ok(())
    }

    /// `‖y − A x̂‖²` for the least-squares solution `x̂`.
    pub fn residual_sq(&self, y: &[T]) -> T {
        if self.k >= self.n {
            return T::zero();
        }
        let mut z = y.to_vec();
        self.apply_qt(&mut z);
        norm_sq(&z[self.k..])
    }

    /// Least-squares coefficients in the original column order.
    pub fn solve_least_squares(&self, y: &[T]) -> Vec<T> {
        let mut z = y.to_vec();
        self.apply_qt(&mut z);
        let xp = back_substitute(&self.r, &z[..self.k]);
        let mut x = vec![T::zero(); self.k];
        for (pos, &orig) in self.perm.iter().enumerate() {
            x[orig] = xp[pos];
        }
        x
    }

    /// `‖R⁻¹‖_F²`, which equals `Trace[(AᵀA)⁻¹]`.
    pub fn inverse_gram_trace(&self) -> T {
        let k = self.k;
        let mut total = T::zero();
        for c in 0..k {
            let mut e = vec![T::zero(); k];
            e[c] = T::one();
            let col = back_substitute(&self.r, &e);
            total += norm_sq(&col);
        }
        total
    }
}

fn back_substitute<T: Real>(r: &Matrix<T>, b: &[T]) -> Vec<T> {
    let k = b.len();
    let mut x = vec![T::zero(); k];
    for i in (0..k).rev() {
        let mut s = b[i];
        for j in (i + 1)..k {
            s -= r[(i, j)] * x[j];
        }
        x[i] = s / r[(i, i)];
    }
    x
}

/// One-sided Jacobi SVD returning singular values only, descending.
pub fn jacobi_singular_values<T: Real>(mut cols: Vec<Vec<T>>) -> Vec<T> {
    let k = cols.len();
    let tol = T::epsilon() * T::of(4.0);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = norm_sq(&cols[p]);
                let beta = norm_sq(&cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (a, b) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = cols.iter().map(|c| norm_sq(c).sqrt()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}
