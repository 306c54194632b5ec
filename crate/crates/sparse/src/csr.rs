//! Compressed-row sparse matrices.

use crate::error::{Result, SparseError};
use crate::scalar::{Scalar, C64};

/// Sparse matrix in compressed-row layout.
///
/// Column indices within each row are sorted and unique. The structure is
/// immutable once built; arithmetic returns new matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Scalar> TripletBuilder<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: T) {
        assert!(row < self.nrows && col < self.ncols, "triplet out of bounds");
        self.entries.push((row, col, value));
    }

    pub fn build(self) -> SparseMatrix<T> {
        let TripletBuilder {
            nrows,
            ncols,
            mut entries,
        } = self;
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Builds from a row-major dense array, dropping exact zeros.
    pub fn from_dense(nrows: usize, ncols: usize, data: &[T]) -> Self {
        let mut b = TripletBuilder::new(nrows, ncols);
        for r in 0..nrows {
            for c in 0..ncols {
                let v = data[r * ncols + c];
                if !v.is_zero() {
                    b.push(r, c, v);
                }
            }
        }
        b.build()
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

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.nrows * self.ncols];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[r * self.ncols + c] = v;
            }
        }
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> SparseMatrix<U> {
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let slot = next[c];
                col_idx[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `alpha * self + beta * other`
    pub fn add_scaled(&self, alpha: T, other: &Self, beta: T) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(SparseError::DimensionMismatch {
                expected: self.nrows * self.ncols,
                got: other.nrows * other.ncols,
            });
        }
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.nrows {
            let (ca, va) = self.row(r);
            let (cb, vb) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < ca.len() || j < cb.len() {
                let take_a = j >= cb.len() || (i < ca.len() && ca[i] <= cb[j]);
                let take_b = i >= ca.len() || (j < cb.len() && cb[j] <= ca[i]);
                if take_a && take_b {
                    col_idx.push(ca[i]);
                    values.push(alpha * va[i] + beta * vb[j]);
                    i += 1;
                    j += 1;
                } else if take_a {
                    col_idx.push(ca[i]);
                    values.push(alpha * va[i]);
                    i += 1;
                } else {
                    col_idx.push(cb[j]);
                    values.push(beta * vb[j]);
                    j += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(T::one(), other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(T::one(), other, -T::one())
    }

    /// Sparse product `self * other` (Gustavson's row-by-row algorithm).
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(SparseError::DimensionMismatch {
                expected: self.ncols,
                got: other.nrows,
            });
        }
        let n = other.ncols;
        let mut marker = vec![usize::MAX; n];
        let mut acc = vec![T::zero(); n];
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            touched.clear();
            let (ca, va) = self.row(r);
            for (&k, &a) in ca.iter().zip(va) {
                let (cb, vb) = other.row(k);
                for (&c, &b) in cb.iter().zip(vb) {
                    if marker[c] != r {
                        marker[c] = r;
                        acc[c] = T::zero();
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                col_idx.push(c);
                values.push(acc[c]);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: n,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// `diag(d) * self`
    pub fn scale_rows(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.nrows);
        let mut out = self.clone();
        for r in 0..self.nrows {
            for v in &mut out.values[self.row_ptr[r]..self.row_ptr[r + 1]] {
                *v = d[r] * *v;
            }
        }
        out
    }

    /// `self * diag(d)`
    pub fn scale_cols(&self, d: &[T]) -> Self {
        assert_eq!(d.len(), self.ncols);
        let mut out = self.clone();
        for (v, &c) in out.values.iter_mut().zip(&self.col_idx) {
            *v *= d[c];
        }
        out
    }

    /// `self - shift * I`, inserting diagonal entries where absent.
    pub fn shifted(&self, shift: T) -> Result<Self> {
        if !self.is_square() {
            return Err(SparseError::NotSquare {
                rows: self.nrows,
                cols: self.ncols,
            });
        }
        let id = Self::from_diagonal(&vec![shift; self.nrows]);
        self.sub(&id)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).1.iter().map(|v| v.modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `y = self * x` for complex `x`.
    pub fn mul_vec_c64(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            let mut acc = C64::new(0.0, 0.0);
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v.scale_c64(x[c]);
            }
            *yr = acc;
        }
        y
    }

    /// `y = self * x` in the matrix's own scalar type.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter()
                    .zip(vals)
                    .fold(T::zero(), |acc, (&c, &v)| acc + v * x[c])
            })
            .collect()
    }

    /// True when the nonzero pattern equals the pattern of the transpose.
    pub fn is_structurally_symmetric(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        let t = self.transpose();
        t.row_ptr == self.row_ptr && t.col_idx == self.col_idx
    }
}
