use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Row-compressed complex matrix with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<C64>,
}

/// Below this many rows a matrix-vector product runs on one thread.
const PARALLEL_ROWS: usize = 4096;

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|t| t.0 >= dim || t.1 >= dim) {
            return Err(Error::OutOfRange { index: i.max(j), dim });
        }
        if dim > u32::MAX as usize {
            return Err(Error::InvalidArgument(format!("dimension {dim} exceeds u32 indexing")));
        }
        triplets.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry") += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j as u32);
            values.push(v);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { dim, row_ptr, col_idx, values })
    }

    pub(crate) fn from_raw(dim: usize, row_ptr: Vec<usize>, col_idx: Vec<u32>, values: Vec<C64>) -> Self {
        debug_assert_eq!(row_ptr.len(), dim + 1);
        debug_assert_eq!(col_idx.len(), values.len());
        Self { dim, row_ptr, col_idx, values }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self {
            dim: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len() as u32).collect(),
            values: d.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[C64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(k) => vals[k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Iterates over stored entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j as usize, x))
        })
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: n });
        }
        Ok(())
    }

    /// `y = A x`.
    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) -> Result<()> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        let row = |i: usize| {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k] as usize];
            }
            acc
        };
        if self.dim >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        } else {
            y.iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        }
        Ok(())
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.apply_into(x, &mut y)?;
        Ok(y)
    }

    /// `⟨x|A|x⟩`.
    pub fn expectation(&self, x: &[C64]) -> Result<C64> {
        let y = self.apply(x)?;
        Ok(x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn adjoint(&self) -> Self {
        let t: Vec<(usize, usize, C64)> = self.entries().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.dim, t).expect("indices in range")
    }

    /// `max |A - A†|` over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        self.entries()
            .map(|(i, j, v)| (v - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let e = self.hermiticity_error();
        if e < tol {
            Ok(())
        } else {
            Err(Error::NotHermitian(e))
        }
    }

    /// Largest absolute row sum, an upper bound on the spectral norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).1.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_len(other.dim)?;
        Self::from_triplets(self.dim, self.entries().chain(other.entries()).collect())
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_len(other.dim)?;
        let mut t = Vec::new();
        for i in 0..self.dim {
            let (ca, va) = self.row(i);
            for (&k, &a) in ca.iter().zip(va) {
                let (cb, vb) = other.row(k as usize);
                for (&j, &b) in cb.iter().zip(vb) {
                    t.push((i, j as usize, a * b));
                }
            }
        }
        Self::from_triplets(self.dim, t)
    }

    /// Largest entrywise difference, treating missing entries as zero.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self
            .add(&other.scaled(C64::new(-1.0, 0.0)))?
            .values
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.entries() {
            m[(i, j)] += v;
        }
        m
    }

    pub(crate) fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_merge_and_sort() {
        let a = SparseOperator::from_triplets(3, vec![(2, 0, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (2, 0, c(0.5, 1.0))]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(2, 0), c(1.5, 1.0));
        assert_eq!(a.get(1, 1), c(0.0, 0.0));
        assert!(SparseOperator::from_triplets(2, vec![(2, 0, c(1.0, 0.0))]).is_err());
    }

    #[test]
    fn matvec_matches_dense() {
        let a = SparseOperator::from_triplets(
            3,
            vec![(0, 0, c(1.0, 0.0)), (0, 2, c(0.0, 1.0)), (1, 1, c(-2.0, 0.5)), (2, 0, c(3.0, 0.0))],
        )
        .unwrap();
        let x = vec![c(1.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)];
        let y = a.apply(&x).unwrap();
        let yd = a.to_dense() * nalgebra::DVector::from_vec(x.clone());
        for k in 0..3 {
            assert!((y[k] - yd[k]).norm() < 1e-14);
        }
        assert!(a.apply(&x[..2]).is_err());
    }

    #[test]
    fn hermiticity_and_products() {
        let h = SparseOperator::from_triplets(2, vec![(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0))]).unwrap();
        assert_eq!(h.hermiticity_error(), 0.0);
        let sq = h.matmul(&h).unwrap();
        assert!(sq.max_abs_diff(&SparseOperator::identity(2)).unwrap() < 1e-15);
        let bad = SparseOperator::from_triplets(2, vec![(0, 1, c(1.0, 0.0))]).unwrap();
        assert!(bad.ensure_hermitian(1e-12).is_err());
        assert_eq!(h.adjoint(), h);
    }
}
