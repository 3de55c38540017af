//! Small dense linear algebra on `Vec`-backed vectors and row-major matrices.
//!
//! Everything here is sized by the polytope dimension or a Ritz block, so the
//! algorithms favour robustness over speed.

use crate::scalar::Real;

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn scale<T: Real>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

pub fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

pub fn max_abs<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> DMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
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
        assert_eq!(self.cols, other.rows);
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
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `AᵀA`.
    pub fn gram(&self) -> Self {
        let mut g = Self::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..self.cols {
                for j in i..self.cols {
                    g[(i, j)] += row[i] * row[j];
                }
            }
        }
        for i in 0..self.cols {
            for j in 0..i {
                g[(i, j)] = g[(j, i)];
            }
        }
        g
    }

    /// `Aᵀx`.
    pub fn tr_mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.rows, x.len());
        let mut out = vec![T::zero(); self.cols];
        for (r, &xr) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += a * xr;
            }
        }
        out
    }
}

impl<T> std::ops::Index<(usize, usize)> for DMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves a square system by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `pivot_tol` times the largest
/// entry of the matrix.
pub fn solve<T: Real>(a: &DMatrix<T>, b: &[T], pivot_tol: T) -> Option<Vec<T>> {
    let n = a.rows;
    assert_eq!(a.cols, n);
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = max_abs(&m.data).max(T::min_positive_value());
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, m[(i, k)].abs()))
            .fold((k, T::zero()), |acc, v| if v.1 > acc.1 { v } else { acc });
        if pmax <= pivot_tol * scale {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.data.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let piv = m[(k, k)];
        for i in (k + 1)..n {
            let f = m[(i, k)] / piv;
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                let v = m[(k, j)];
                m[(i, j)] -= f * v;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in (k + 1)..n {
            s -= m[(k, j)] * x[j];
        }
        x[k] = s / m[(k, k)];
    }
    Some(x)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// the columns of the returned matrix.
pub fn symmetric_eigen<T: Real>(a: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let n = a.rows;
    assert_eq!(a.cols, n);
    let mut m = a.clone();
    let mut v = DMatrix::identity(n);
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        let diag: T = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum();
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let vals = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vecs[(k, new)] = v[(k, old)];
        }
    }
    (vals, vecs)
}

/// Minimum-norm least-squares solution of `A x ≈ b`.
#[derive(Debug, Clone)]
pub struct LeastSquares<T> {
    pub x: Vec<T>,
    /// Euclidean norm of `A x − b`.
    pub residual: T,
    pub rank: usize,
}

/// Least squares through the pseudo-inverse of `AᵀA`; singular directions
/// below `rank_tol` (relative to the largest eigenvalue) are dropped.
pub fn least_squares<T: Real>(a: &DMatrix<T>, b: &[T], rank_tol: T) -> LeastSquares<T> {
    let g = a.gram();
    let atb = a.tr_mul_vec(b);
    let (vals, vecs) = symmetric_eigen(&g);
    let top = vals.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let mut x = vec![T::zero(); a.cols];
    let mut rank = 0;
    for (k, &lam) in vals.iter().enumerate() {
        if lam <= rank_tol * top || lam <= T::zero() {
            continue;
        }
        rank += 1;
        let coef = (0..a.cols).map(|i| vecs[(i, k)] * atb[i]).sum::<T>() / lam;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += coef * vecs[(i, k)];
        }
    }
    let r = sub(&a.mul_vec(&x), b);
    LeastSquares {
        residual: norm(&r),
        x,
        rank,
    }
}

/// Numerical rank of a set of row vectors: Gram–Schmidt with pivoting on
/// the largest remaining residual, stopping once it falls below `tol` times
/// the longest input row.
pub fn rank<T: Real>(rows: &[Vec<T>], tol: T) -> usize {
    let top = rows.iter().map(|r| norm(r)).fold(T::zero(), T::max);
    if top == T::zero() {
        return 0;
    }
    let mut rest: Vec<Vec<T>> = rows.to_vec();
    let mut rank = 0;
    while !rest.is_empty() {
        let (k, best) = rest
            .iter()
            .enumerate()
            .map(|(k, r)| (k, norm(r)))
            .fold((0, T::zero()), |a, b| if b.1 > a.1 { b } else { a });
        if best <= tol * top {
            break;
        }
        let q = scale(&rest.swap_remove(k), T::one() / best);
        for r in &mut rest {
            let c = dot(r, &q);
            for (ri, &qi) in r.iter_mut().zip(&q) {
                *ri -= c * qi;
            }
        }
        rank += 1;
    }
    rank
}

/// Orthonormal basis (Gram–Schmidt, reorthogonalised) of the span of `rows`.
pub fn orthonormal_basis<T: Real>(rows: &[Vec<T>], tol: T) -> Vec<Vec<T>> {
    let mut basis: Vec<Vec<T>> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                for (vi, &bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let n = norm(&v);
        if n > tol * norm(r).max(T::min_positive_value()) {
            basis.push(scale(&v, T::one() / n));
        }
    }
    basis
}
