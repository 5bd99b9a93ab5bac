//! Compressed-sparse-row storage for square complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indptr: vec![0; dim + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
            rows[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                if v != C64::new(0.0, 0.0) {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            dim,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let n = m.nrows();
        Self::from_triplets(
            n,
            (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| (r, c, m[(r, c)])),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (r, c, v * s)))
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `self + s * other`
    pub fn axpy(&self, s: C64, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(
            self.dim,
            self.iter()
                .chain(other.iter().map(|(r, c, v)| (r, c, v * s))),
        )
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut acc = vec![C64::new(0.0, 0.0); self.dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; self.dim];
        let mut triplets = Vec::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &touched {
                triplets.push((r, c, acc[c]));
                acc[c] = C64::new(0.0, 0.0);
                mark[c] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.dim, triplets)
    }

    /// `y = self * x`
    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for (c, v) in self.row(r) {
                s += v * x[c];
            }
            *out = s;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `out = alpha * self * b (+ out if accumulate)` for a column-major dense `b`.
    pub fn mul_dense_into(&self, alpha: C64, b: &DMatrix<C64>, out: &mut DMatrix<C64>, accumulate: bool) {
        assert_eq!(b.nrows(), self.dim);
        assert_eq!(out.nrows(), self.dim);
        assert_eq!(out.ncols(), b.ncols());
        self.mul_columns_into(alpha, b.as_slice(), out.as_mut_slice(), accumulate);
    }

    /// Slice form of [`SparseMatrix::mul_dense_into`]: `b` and `out` hold
    /// column-major blocks with `dim` rows each.
    pub fn mul_columns_into(&self, alpha: C64, b: &[C64], out: &mut [C64], accumulate: bool) {
        let d = self.dim;
        assert_eq!(b.len(), out.len());
        assert_eq!(b.len() % d.max(1), 0);
        for (col, dst) in b.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
            for (r, o) in dst.iter_mut().enumerate() {
                let mut s = C64::new(0.0, 0.0);
                for k in self.indptr[r]..self.indptr[r + 1] {
                    s += self.values[k] * col[self.indices[k]];
                }
                if accumulate {
                    *o += alpha * s;
                } else {
                    *o = alpha * s;
                }
            }
        }
    }

    pub fn mul_dense(&self, b: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, b.ncols());
        self.mul_dense_into(C64::new(1.0, 0.0), b, &mut out, false);
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Entrywise max |M - M^dagger|.
    pub fn hermiticity_defect(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }
}

impl Add for &SparseMatrix {
    type Output = SparseMatrix;
    fn add(self, rhs: &SparseMatrix) -> SparseMatrix {
        self.axpy(C64::new(1.0, 0.0), rhs)
    }
}

impl Sub for &SparseMatrix {
    type Output = SparseMatrix;
    fn sub(self, rhs: &SparseMatrix) -> SparseMatrix {
        self.axpy(C64::new(-1.0, 0.0), rhs)
    }
}

impl Mul for &SparseMatrix {
    type Output = SparseMatrix;
    fn mul(self, rhs: &SparseMatrix) -> SparseMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &SparseMatrix {
    type Output = SparseMatrix;
    fn neg(self) -> SparseMatrix {
        self.scale_real(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = SparseMatrix::from_triplets(
            3,
            vec![(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (2, 2, c(1.0, 0.0)), (2, 2, c(-1.0, 0.0))],
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0, 0.0));
        assert_eq!(m.get(2, 2), c(0.0, 0.0));
    }

    #[test]
    fn products_match_dense() {
        let a = SparseMatrix::from_triplets(3, vec![(0, 1, c(1.0, 2.0)), (1, 2, c(0.5, 0.0)), (2, 0, c(0.0, -1.0))]);
        let b = SparseMatrix::from_triplets(3, vec![(0, 0, c(2.0, 0.0)), (1, 0, c(1.0, 1.0)), (2, 1, c(3.0, 0.0))]);
        let dense = a.to_dense() * b.to_dense();
        assert!(crate::hilbert::dense_max_abs(&(a.matmul(&b).to_dense() - &dense)) < 1e-15);
        assert!(crate::hilbert::dense_max_abs(&(a.mul_dense(&b.to_dense()) - &dense)) < 1e-15);
        let x = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)];
        let y = a.mul_vec(&x);
        let yd = a.to_dense() * nalgebra::DVector::from_vec(x);
        for i in 0..3 {
            assert!((y[i] - yd[i]).norm() < 1e-15);
        }
    }

    #[test]
    fn adjoint_is_conjugate_transpose() {
        let a = SparseMatrix::from_triplets(2, vec![(0, 1, c(1.0, 2.0))]);
        let ad = a.adjoint();
        assert_eq!(ad.get(1, 0), c(1.0, -2.0));
        assert_eq!(ad.get(0, 1), c(0.0, 0.0));
        assert!(a.hermiticity_defect() > 0.0);
        assert_eq!((&a + &ad).hermiticity_defect(), 0.0);
    }
}
