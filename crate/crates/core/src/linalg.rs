//! Dense row-major matrices and a rank-revealing least-squares solver.

use crate::error::{Error, Result};
use crate::scalar::{dot, norm_sq, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Panics when `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix buffer has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
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

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

/// Solution of `min ||A b - y||`.
#[derive(Clone, Debug)]
pub struct LeastSquares<T> {
    pub coefficients: Vec<T>,
    /// Numerical rank of the design.
    pub rank: usize,
    pub rank_deficient: bool,
    /// Residual sum of squares at the solution.
    pub rss: T,
}

/// Householder QR with column pivoting.
///
/// Columns are pivoted by residual norm relative to their original norm, so a
/// column counts as dependent exactly when the part of it outside the span of
/// the already-chosen columns is below `T::rank_tolerance()` of its length.
/// For a rank-deficient design the minimum-norm minimizer is returned.
pub fn least_squares<T: Scalar>(design: &Matrix<T>, targets: &[T]) -> Result<LeastSquares<T>> {
    if targets.len() != design.rows() {
        return Err(Error::DimensionMismatch {
            expected: design.rows(),
            found: targets.len(),
        });
    }
    if !design.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    least_squares_columns((0..design.cols()).map(|c| design.column(c)).collect(), targets)
}

/// [`least_squares`] on a design given column by column.
pub(crate) fn least_squares_columns<T: Scalar>(mut cols: Vec<Vec<T>>, targets: &[T]) -> Result<LeastSquares<T>> {
    let (n, p) = (targets.len(), cols.len());
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if cols.iter().any(|c| c.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cols.iter().map(Vec::len).find(|&l| l != n).unwrap_or(0),
        });
    }
    if cols.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }

    let orig: Vec<T> = cols.iter().map(|c| norm_sq(c).sqrt()).collect();
    let mut y = targets.to_vec();
    let mut perm: Vec<usize> = (0..p).collect();
    let tol = T::rank_tolerance();
    let mut rank = 0;

    for k in 0..n.min(p) {
        let mut best = None;
        let mut best_rel = tol;
        for (j, &col) in perm.iter().enumerate().skip(k) {
            if orig[col] == T::zero() {
                continue;
            }
            let rel = norm_sq(&cols[col][k..]).sqrt() / orig[col];
            if rel > best_rel {
                best_rel = rel;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        perm.swap(k, j);

        let pivot = perm[k];
        let (v, beta) = householder(&cols[pivot][k..]);
        for &col in &perm[k..] {
            reflect(&v, beta, &mut cols[col][k..]);
        }
        reflect(&v, beta, &mut y[k..]);
        rank += 1;
    }

    let rss: T = norm_sq(&y[rank..]);
    let r = |i: usize, j: usize| cols[perm[j]][i];

    // Basic solution in pivoted coordinates.
    let mut z = vec![T::zero(); p];
    for i in (0..rank).rev() {
        let mut s = y[i];
        for j in i + 1..rank {
            s -= r(i, j) * z[j];
        }
        z[i] = s / r(i, i);
    }

    if rank < p {
        // Null space basis: columns w_j = [-R11^{-1} R12 e_j ; e_j].
        let free = p - rank;
        let mut w = vec![vec![T::zero(); p]; free];
        for (f, wf) in w.iter_mut().enumerate() {
            let j = rank + f;
            wf[j] = T::one();
            for i in (0..rank).rev() {
                let mut s = -r(i, j);
                for l in i + 1..rank {
                    s -= r(i, l) * wf[l];
                }
                wf[i] = s / r(i, i);
            }
        }
        // z <- z - W (W^T W)^{-1} W^T z
        let mut gram = Matrix::zeros(free, free);
        for a in 0..free {
            for b in 0..=a {
                let g = dot(&w[a], &w[b]);
                gram[(a, b)] = g;
                gram[(b, a)] = g;
            }
        }
        let rhs: Vec<T> = w.iter().map(|wf| dot(wf, &z)).collect();
        let c = cholesky_solve(&gram, &rhs);
        for (wf, &cf) in w.iter().zip(&c) {
            for (zi, &wi) in z.iter_mut().zip(wf) {
                *zi -= cf * wi;
            }
        }
    }

    let mut coefficients = vec![T::zero(); p];
    for (k, &col) in perm.iter().enumerate() {
        coefficients[col] = z[k];
    }
    Ok(LeastSquares {
        coefficients,
        rank,
        rank_deficient: rank < p,
        rss,
    })
}

/// Orthogonal compression of a least-squares problem: with `A = Q [R; 0]`
/// and `Q^T y = [c; e]`, every column subset `S` satisfies
/// `min ||A_S b - y||^2 = min ||R_S b - c||^2 + ||e||^2`.
pub(crate) struct Compressed<T> {
    /// Columns of `R`, each of length `min(n, p)`.
    pub r_columns: Vec<Vec<T>>,
    pub c: Vec<T>,
    pub residual: T,
}

pub(crate) fn compress<T: Scalar>(mut cols: Vec<Vec<T>>, targets: &[T]) -> Compressed<T> {
    let n = targets.len();
    let k = n.min(cols.len());
    let mut y = targets.to_vec();
    for j in 0..k {
        let (v, beta) = householder(&cols[j][j..]);
        for col in cols[j..].iter_mut() {
            reflect(&v, beta, &mut col[j..]);
        }
        reflect(&v, beta, &mut y[j..]);
    }
    let residual = norm_sq(&y[k..]);
    y.truncate(k);
    for col in &mut cols {
        col.truncate(k);
    }
    // entries below the diagonal are rounding residue
    for (j, col) in cols.iter_mut().enumerate() {
        for v in col.iter_mut().skip(j + 1) {
            *v = T::zero();
        }
    }
    Compressed {
        r_columns: cols,
        c: y,
        residual,
    }
}

/// For a full-column-rank problem `min ||A b - y||`, the residual sum of
/// squares and, per column, how much it grows when that column is dropped
/// (`b_j^2 / [(A^T A)^-1]_jj`). `None` when `A` is numerically rank deficient.
pub(crate) fn drop_one_increments<T: Scalar>(mut cols: Vec<Vec<T>>, targets: &[T]) -> Option<(T, Vec<T>)> {
    let p = cols.len();
    let m = targets.len();
    if p > m {
        return None;
    }
    let norms: Vec<T> = cols.iter().map(|c| norm_sq(c).sqrt()).collect();
    let mut y = targets.to_vec();
    for j in 0..p {
        let (v, beta) = householder(&cols[j][j..]);
        for col in cols[j..].iter_mut() {
            reflect(&v, beta, &mut col[j..]);
        }
        reflect(&v, beta, &mut y[j..]);
        if !(cols[j][j].abs() > T::rank_tolerance() * norms[j]) {
            return None;
        }
    }
    let u = |i: usize, j: usize| cols[j][i];
    let mut b = vec![T::zero(); p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for j in i + 1..p {
            s -= u(i, j) * b[j];
        }
        b[i] = s / u(i, i);
    }
    // rows of U^-1, by back substitution on U X = I
    let mut inv = vec![vec![T::zero(); p]; p];
    for c in 0..p {
        for i in (0..=c).rev() {
            let mut s = if i == c { T::one() } else { T::zero() };
            for j in i + 1..=c {
                s -= u(i, j) * inv[j][c];
            }
            inv[i][c] = s / u(i, i);
        }
    }
    let increments = (0..p).map(|j| b[j] * b[j] / norm_sq(&inv[j])).collect();
    Some((norm_sq(&y[p..]), increments))
}

fn householder<T: Scalar>(x: &[T]) -> (Vec<T>, T) {
    let norm = norm_sq(x).sqrt();
    let mut v = x.to_vec();
    if norm == T::zero() {
        return (v, T::zero());
    }
    let alpha = if x[0] >= T::zero() { -norm } else { norm };
    v[0] -= alpha;
    let vv = norm_sq(&v);
    let beta = if vv == T::zero() {
        T::zero()
    } else {
        T::lit(2.0) / vv
    };
    (v, beta)
}

fn reflect<T: Scalar>(v: &[T], beta: T, x: &mut [T]) {
    if beta == T::zero() {
        return;
    }
    let s = beta * dot(v, x);
    for (xi, &vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
fn cholesky_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = if i == j {
                s.max(T::zero()).sqrt()
            } else {
                s / l[(j, j)]
            };
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}
