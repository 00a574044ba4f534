//! Small dense helpers and a compressed-row sparse matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

#[inline]
pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Numerical rank of a set of row vectors.
pub fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let d = rows[0].len();
    let m = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    m.rank(tol)
}

/// Determinant of a square matrix given by rows.
pub fn det(rows: &[Vec<f64>]) -> f64 {
    let d = rows.len();
    DMatrix::from_fn(d, d, |i, j| rows[i][j]).determinant()
}

/// Unit vector orthogonal to the `d - 1` given vectors in `R^d`, via cofactors.
/// Returns `None` when the vectors are (numerically) dependent.
pub fn orthogonal_complement(vectors: &[Vec<f64>], d: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(vectors.len() + 1, d);
    let mut normal = vec![0.0; d];
    for (j, slot) in normal.iter_mut().enumerate() {
        let minor: Vec<Vec<f64>> = vectors
            .iter()
            .map(|v| v.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, x)| *x).collect())
            .collect();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *slot = if minor.is_empty() { sign } else { sign * det(&minor) };
    }
    let len = norm(&normal);
    let scale_ref: f64 = vectors.iter().map(|v| norm(v)).product::<f64>().max(1e-300);
    if len <= 1e-12 * scale_ref {
        return None;
    }
    Some(normal.iter().map(|x| x / len).collect())
}

/// Orthonormal basis of the span of `vectors` (modified Gram-Schmidt).
pub fn orthonormal_basis(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let p = dot(&w, b);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= p * bi;
            }
        }
        let len = norm(&w);
        if len > tol * norm(v).max(1.0) {
            basis.push(w.iter().map(|x| x / len).collect());
        }
    }
    basis
}

/// Compressed sparse row matrix with `f64` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (j, v) in row {
                if j >= ncols {
                    return Err(Error::OutOfRange { index: j, len: ncols });
                }
                if v != 0.0 {
                    if indices.len() > *indptr.last().unwrap() && *indices.last().unwrap() == j {
                        *values.last_mut().unwrap() += v;
                    } else {
                        indices.push(j);
                        values.push(v);
                    }
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self { nrows, ncols, indptr, indices, values })
    }

    /// 0/1 matrix from row supports.
    pub fn from_supports(ncols: usize, rows: &[Vec<usize>]) -> Result<Self> {
        Self::from_rows(ncols, rows.iter().map(|r| r.iter().map(|&j| (j, 1.0)).collect()).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).filter(|&j| m[(i, j)] != 0.0).map(|j| (j, m[(i, j)])).collect())
            .collect();
        Self::from_rows(m.ncols(), rows).expect("dense indices are in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.ncols];
        for (i, j, v) in self.triplets() {
            rows[j].push((i, v));
        }
        Self::from_rows(self.nrows, rows).expect("transpose indices are in range")
    }

    /// Largest Euclidean norm of a row (`2 -> inf` operator norm).
    pub fn max_row_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest Euclidean norm of a column (`1 -> 2` operator norm).
    pub fn max_col_norm(&self) -> f64 {
        let mut acc = vec![0.0; self.ncols];
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            acc[j] += v * v;
        }
        acc.into_iter().fold(0.0, f64::max).sqrt()
    }

    /// Largest number of nonzeros in a column.
    pub fn max_col_nnz(&self) -> usize {
        let mut acc = vec![0usize; self.ncols];
        for &j in &self.indices {
            acc[j] += 1;
        }
        acc.into_iter().max().unwrap_or(0)
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.nrows).map(|i| self.row_nnz(i)).max().unwrap_or(0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_integral(&self) -> bool {
        self.values.iter().all(|v| v.fract() == 0.0 && v.abs() < 2f64.powi(52))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Sparse product `self * rhs`.
    pub fn matmul(&self, rhs: &SparseMatrix) -> Result<SparseMatrix> {
        if self.ncols != rhs.nrows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.nrows, self.ncols, rhs.nrows, rhs.ncols
            )));
        }
        let mut acc = vec![0.0; rhs.ncols];
        let mut seen = vec![false; rhs.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut rows = Vec::with_capacity(self.nrows);
        for i in 0..self.nrows {
            for (k, a) in self.row(i) {
                for (j, b) in rhs.row(k) {
                    if !seen[j] {
                        seen[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            let mut row = Vec::with_capacity(touched.len());
            for &j in &touched {
                if acc[j] != 0.0 {
                    row.push((j, acc[j]));
                }
                acc[j] = 0.0;
                seen[j] = false;
            }
            touched.clear();
            rows.push(row);
        }
        SparseMatrix::from_rows(rhs.ncols, rows)
    }

    /// Dense matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Vertical stack of matrices sharing a column count.
    pub fn vstack(blocks: &[SparseMatrix]) -> Result<SparseMatrix> {
        let ncols = blocks.first().map_or(0, |b| b.ncols);
        let mut rows = Vec::new();
        for b in blocks {
            if b.ncols != ncols {
                return Err(Error::DimensionMismatch("vstack column counts differ".into()));
            }
            rows.extend((0..b.nrows).map(|i| b.row(i).collect::<Vec<_>>()));
        }
        SparseMatrix::from_rows(ncols, rows)
    }

    /// Block-diagonal arrangement.
    pub fn block_diag(blocks: &[SparseMatrix]) -> SparseMatrix {
        let ncols = blocks.iter().map(|b| b.ncols).sum();
        let mut rows = Vec::new();
        let mut offset = 0;
        for b in blocks {
            rows.extend((0..b.nrows).map(|i| b.row(i).map(|(j, v)| (j + offset, v)).collect::<Vec<_>>()));
            offset += b.ncols;
        }
        SparseMatrix::from_rows(ncols, rows).expect("block offsets are in range")
    }

    /// Entrywise equality with exact comparison.
    pub fn exactly_equals(&self, other: &SparseMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && (0..self.nrows).all(|i| self.row(i).eq(other.row(i)))
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &SparseMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows.min(other.nrows) {
            let mut a: Vec<(usize, f64)> = self.row(i).collect();
            a.extend(other.row(i).map(|(j, v)| (j, -v)));
            a.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < a.len() {
                let j = a[k].0;
                let mut s = 0.0;
                while k < a.len() && a[k].0 == j {
                    s += a[k].1;
                    k += 1;
                }
                worst = worst.max(s.abs());
            }
        }
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return f64::INFINITY;
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_matches_dense() {
        let a = SparseMatrix::from_rows(3, vec![vec![(0, 1.0), (2, 2.0)], vec![(1, -1.0)]]).unwrap();
        let b = SparseMatrix::from_rows(2, vec![vec![(0, 1.0)], vec![(1, 3.0)], vec![(0, 1.0), (1, 1.0)]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.to_dense(), a.to_dense() * b.to_dense());
    }

    #[test]
    fn cancellation_drops_entries() {
        let a = SparseMatrix::from_rows(2, vec![vec![(0, 1.0), (1, -1.0)]]).unwrap();
        let b = SparseMatrix::from_rows(1, vec![vec![(0, 1.0)], vec![(0, 1.0)]]).unwrap();
        assert_eq!(a.matmul(&b).unwrap().nnz(), 0);
    }

    #[test]
    fn norms() {
        let a = SparseMatrix::from_rows(2, vec![vec![(0, 3.0), (1, 4.0)], vec![(1, 1.0)]]).unwrap();
        assert_eq!(a.max_row_norm(), 5.0);
        assert!((a.max_col_norm() - 17f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.max_col_nnz(), 2);
    }

    #[test]
    fn complement_is_orthogonal() {
        let n = orthogonal_complement(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 3).unwrap();
        assert!((n[2].abs() - 1.0).abs() < 1e-15);
        assert!(orthogonal_complement(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]], 3).is_none());
    }
}
