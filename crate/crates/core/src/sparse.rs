//! Compressed sparse row matrices and an up-looking sparse Cholesky
//! factorisation for the symmetric positive definite systems produced by
//! P1 assembly.
//!
//! Fill is controlled by a geometric nested-dissection ordering computed from
//! node coordinates, which keeps factor sizes near `O(n log n)` on planar
//! meshes.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square sparse matrix in CSR layout with sorted, de-duplicated columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        (0..self.n)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<T>())
            .sum()
    }

    /// Row sums, i.e. `A·1`.
    pub fn row_sums(&self) -> Vec<T> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// `a·A + b·B` on the union of the two patterns.
    pub fn lin_comb(a: T, lhs: &Self, b: T, rhs: &Self) -> Self {
        assert_eq!(lhs.n, rhs.n);
        let mut trip = Vec::with_capacity(lhs.nnz() + rhs.nnz());
        for i in 0..lhs.n {
            trip.extend(lhs.row(i).map(|(j, v)| (i, j, a * v)));
            trip.extend(rhs.row(i).map(|(j, v)| (i, j, b * v)));
        }
        Self::from_triplets(lhs.n, trip)
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Principal submatrix on `keep` (in the given order).
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut trip = Vec::new();
        for (new_i, &old_i) in keep.iter().enumerate() {
            for (j, v) in self.row(old_i) {
                if map[j] != usize::MAX {
                    trip.push((new_i, map[j], v));
                }
            }
        }
        Self::from_triplets(keep.len(), trip)
    }
}

/// Fill-reducing ordering by recursive coordinate bisection.
///
/// Returns `perm` with `perm[new] = old`. Separator nodes of each bisection
/// are numbered after both halves, so eliminating the halves creates no fill
/// across the cut.
pub fn nested_dissection<T: Real>(coords: &[[T; 2]], adjacency: &CsrMatrix<T>) -> Vec<usize> {
    const LEAF: usize = 48;
    let n = coords.len();
    assert_eq!(n, adjacency.dim());
    let mut perm = Vec::with_capacity(n);
    let mut side = vec![0u8; n];
    let mut stack: Vec<(Vec<usize>, Option<Vec<usize>>)> = vec![((0..n).collect(), None)];
    // Iterative post-order: a frame carrying `Some(separator)` is emitted
    // after both halves pushed above it have been processed.
    while let Some((nodes, sep)) = stack.pop() {
        if let Some(sep) = sep {
            perm.extend(sep);
            continue;
        }
        if nodes.len() <= LEAF {
            perm.extend(nodes);
            continue;
        }
        let (mut lo, mut hi) = ([T::infinity(); 2], [T::neg_infinity(); 2]);
        for &v in &nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(coords[v][k]);
                hi[k] = hi[k].max(coords[v][k]);
            }
        }
        let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
        let mut sorted = nodes;
        let mid = sorted.len() / 2;
        sorted.select_nth_unstable_by(mid, |&a, &b| {
            coords[a][axis]
                .partial_cmp(&coords[b][axis])
                .unwrap()
                .then(a.cmp(&b))
        });
        for &v in &sorted[..mid] {
            side[v] = 1;
        }
        for &v in &sorted[mid..] {
            side[v] = 2;
        }
        let (mut part_a, mut separator) = (Vec::new(), Vec::new());
        for &v in &sorted[..mid] {
            if adjacency.row(v).any(|(j, _)| side[j] == 2) {
                separator.push(v);
            } else {
                part_a.push(v);
            }
        }
        let part_b: Vec<usize> = sorted[mid..].to_vec();
        for &v in &sorted {
            side[v] = 0;
        }
        stack.push((Vec::new(), Some(separator)));
        stack.push((part_b, None));
        stack.push((part_a, None));
    }
    debug_assert_eq!(perm.len(), n);
    perm
}

/// Sparse Cholesky factor `P A Pᵀ = L Lᵀ`, stored by columns.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factorises a symmetric positive definite matrix. `perm[new] = old`
    /// gives the elimination order (identity when `None`).
    pub fn factor(a: &CsrMatrix<T>, perm: Option<&[usize]>) -> Result<Self> {
        let n = a.dim();
        let perm: Vec<usize> = match perm {
            Some(p) => {
                assert_eq!(p.len(), n);
                p.to_vec()
            }
            None => (0..n).collect(),
        };
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        // Lower triangle of the permuted matrix, row by row.
        let mut lower: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, v) in a.row(old_i) {
                let j = inv[old_j];
                if j <= i {
                    lower[i].push((j, v));
                }
            }
        }
        for row in &mut lower {
            row.sort_unstable_by_key(|e| e.0);
        }

        let parent = elimination_tree(&lower);
        let mut counts = vec![1usize; n];
        let mut mark = vec![usize::MAX; n];
        let mut stack = Vec::with_capacity(n);
        for (k, row) in lower.iter().enumerate() {
            row_pattern(k, row, &parent, &mut mark, &mut stack);
            for &j in &stack {
                counts[j] += 1;
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for j in 0..n {
            col_ptr[j + 1] = col_ptr[j] + counts[j];
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut values = vec![T::zero(); nnz];
        let mut next: Vec<usize> = col_ptr[..n].iter().map(|&p| p + 1).collect();
        let mut x = vec![T::zero(); n];
        mark.iter_mut().for_each(|m| *m = usize::MAX);

        for (k, row) in lower.iter().enumerate() {
            row_pattern(k, row, &parent, &mut mark, &mut stack);
            for &(j, v) in &lower[k] {
                x[j] += v;
            }
            let mut d = x[k];
            x[k] = T::zero();
            // `stack` is in topological order: every column is finished
            // before the columns that depend on it.
            for &j in &stack {
                let lkj = x[j] / values[col_ptr[j]];
                x[j] = T::zero();
                for p in (col_ptr[j] + 1)..next[j] {
                    x[row_idx[p]] -= values[p] * lkj;
                }
                d -= lkj * lkj;
                row_idx[next[j]] = k;
                values[next[j]] = lkj;
                next[j] += 1;
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: k,
                    value: d.to_f64_lossy(),
                });
            }
            row_idx[col_ptr[k]] = k;
            values[col_ptr[k]] = d.sqrt();
        }
        Ok(Self {
            n,
            perm,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.values.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..self.n {
            let start = self.col_ptr[j];
            y[j] /= self.values[start];
            let yj = y[j];
            for p in (start + 1)..self.col_ptr[j + 1] {
                y[self.row_idx[p]] -= self.values[p] * yj;
            }
        }
        for j in (0..self.n).rev() {
            let start = self.col_ptr[j];
            let mut s = y[j];
            for p in (start + 1)..self.col_ptr[j + 1] {
                s -= self.values[p] * y[self.row_idx[p]];
            }
            y[j] = s / self.values[start];
        }
        let mut x = vec![T::zero(); self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

fn elimination_tree<T>(lower: &[Vec<(usize, T)>]) -> Vec<usize> {
    let n = lower.len();
    let mut parent = vec![usize::MAX; n];
    let mut ancestor = vec![usize::MAX; n];
    for (k, row) in lower.iter().enumerate() {
        for &(i, _) in row {
            let mut i = i;
            while i != usize::MAX && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == usize::MAX {
                    parent[i] = k;
                    break;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L` (excluding the diagonal), written to
/// `out` in ascending order, which is a valid elimination order because a
/// parent in the elimination tree always follows its children.
fn row_pattern<T>(
    k: usize,
    row: &[(usize, T)],
    parent: &[usize],
    mark: &mut [usize],
    out: &mut Vec<usize>,
) {
    out.clear();
    mark[k] = k;
    let mut path = Vec::new();
    for &(i, _) in row {
        if i >= k {
            continue;
        }
        let mut j = i;
        path.clear();
        while mark[j] != k {
            path.push(j);
            mark[j] = k;
            j = parent[j];
            if j == usize::MAX {
                break;
            }
        }
        out.extend_from_slice(&path);
    }
    out.sort_unstable();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + 0.01 * i as f64));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, 4.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn cholesky_solves_tridiagonal() {
        let a = laplacian_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let chol = Cholesky::factor(&a, None).unwrap();
        let x = chol.solve(&b);
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_with_permutation_on_grid() {
        let (nx, ny) = (23, 17);
        let idx = |i: usize, j: usize| i * ny + j;
        let mut t = Vec::new();
        let mut coords = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                coords.push([i as f64, j as f64]);
                t.push((idx(i, j), idx(i, j), 4.1));
                if i + 1 < nx {
                    t.push((idx(i, j), idx(i + 1, j), -1.0));
                    t.push((idx(i + 1, j), idx(i, j), -1.0));
                }
                if j + 1 < ny {
                    t.push((idx(i, j), idx(i, j + 1), -1.0));
                    t.push((idx(i, j + 1), idx(i, j), -1.0));
                }
            }
        }
        let a = CsrMatrix::from_triplets(nx * ny, t);
        let perm = nested_dissection(&coords, &a);
        let mut seen = perm.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..nx * ny).collect::<Vec<_>>());
        let chol = Cholesky::factor(&a, Some(&perm)).unwrap();
        let b: Vec<f64> = (0..nx * ny).map(|i| 1.0 + (i % 7) as f64).collect();
        let x = chol.solve(&b);
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(
            Cholesky::factor(&a, None),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
