//! Compressed sparse row operators over a finite Hilbert space.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Result};

/// Entries with magnitude below this are dropped when an operator is built.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Complex sparse square matrix, immutable after construction.
///
/// Rows are stored in CSR form with strictly increasing column indices per
/// row, so iteration order (and therefore every derived floating-point result)
/// is deterministic.
#[derive(Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl fmt::Debug for SparseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SparseOperator")
            .field("dim", &self.dim)
            .field("nnz", &self.nnz())
            .finish()
    }
}

impl SparseOperator {
    /// Builds an operator from `(row, col, value)` triplets. Duplicate
    /// positions are summed; sums below [`DROP_TOLERANCE`] are dropped.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        if dim == 0 {
            return domain("operator dimension must be positive");
        }
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return domain(format!("entry ({r}, {c}) out of range for dimension {dim}"));
            }
            *acc.entry((r, c)).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        Ok(Self::from_sorted(dim, acc.into_iter()))
    }

    /// `entries` must be sorted by (row, col) with no duplicates.
    fn from_sorted(dim: usize, entries: impl Iterator<Item = ((usize, usize), Complex64)>) -> Self {
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for ((r, c), v) in entries {
            if v.norm() < DROP_TOLERANCE {
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    /// Real diagonal operator.
    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        Self::from_sorted(
            dim,
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| ((i, i), Complex64::new(v, 0.0))),
        )
    }

    /// Converts a dense matrix, dropping entries below [`DROP_TOLERANCE`].
    pub fn from_dense(m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return domain("dense operator must be square and non-empty");
        }
        let dim = m.nrows();
        Ok(Self::from_sorted(
            dim,
            (0..dim).flat_map(|r| (0..dim).map(move |c| (r, c))).map(|(r, c)| ((r, c), m[(r, c)])),
        ))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    /// Stored entries of one row as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        if r >= self.dim {
            return Complex64::new(0.0, 0.0);
        }
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in self.iter() {
            acc.insert((c, r), v.conj());
        }
        Self::from_sorted(self.dim, acc.into_iter())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_sorted(self.dim, self.iter().map(|(r, c, v)| ((r, c), v * factor)))
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return domain(format!("dimension mismatch: {} vs {}", self.dim, other.dim));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in self.iter().chain(other.iter()) {
            *acc.entry((r, c)).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        Ok(Self::from_sorted(self.dim, acc.into_iter()))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scale_real(-1.0))
    }

    /// Sparse matrix product `self · other`.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    *acc.entry((r, c)).or_insert(Complex64::new(0.0, 0.0)) += a * b;
                }
            }
        }
        Ok(Self::from_sorted(self.dim, acc.into_iter()))
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    /// Tensor product `self ⊗ other`; `self` indexes the slow (leading) factor.
    pub fn kron(&self, other: &Self) -> Self {
        let dim = self.dim * other.dim;
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r1, c1, v1) in self.iter() {
            for (r2, c2, v2) in other.iter() {
                acc.insert((r1 * other.dim + r2, c1 * other.dim + c2), v1 * v2);
            }
        }
        Self::from_sorted(dim, acc.into_iter())
    }

    pub fn apply(&self, x: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if x.len() != self.dim {
            return domain(format!(
                "vector length {} does not match operator dimension {}",
                x.len(),
                self.dim
            ));
        }
        let mut y = DVector::zeros(self.dim);
        self.apply_into(x.as_slice(), y.as_mut_slice());
        Ok(y)
    }

    /// `y = A x` on raw slices; lengths are the caller's responsibility.
    pub(crate) fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.dim) {
            let mut s = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *out = s;
        }
    }

    /// `out = A · M` for a dense column-major `M`.
    pub(crate) fn mul_dense_into(&self, m: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        let n = self.dim;
        for j in 0..m.ncols() {
            let src = &m.as_slice()[j * n..(j + 1) * n];
            let dst = &mut out.as_mut_slice()[j * n..(j + 1) * n];
            self.apply_into(src, dst);
        }
    }

    /// `out = M · A` for a dense column-major `M`.
    pub(crate) fn dense_mul_into(&self, m: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        out.fill(Complex64::new(0.0, 0.0));
        let n = self.dim;
        // (M A)[:, c] = Σ_r M[:, r] A[r, c]
        for r in 0..n {
            let src = m.column(r);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                let v = self.vals[k];
                let mut dst = out.column_mut(c);
                dst.axpy(v, &src, Complex64::new(1.0, 0.0));
            }
        }
    }

    pub fn mul_dense(&self, m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        if m.nrows() != self.dim {
            return domain("dense operand row count does not match operator dimension");
        }
        let mut out = DMatrix::zeros(self.dim, m.ncols());
        self.mul_dense_into(m, &mut out);
        Ok(out)
    }

    pub fn dense_mul(&self, m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        if m.ncols() != self.dim || m.nrows() != self.dim {
            return domain("dense operand shape does not match operator dimension");
        }
        let mut out = DMatrix::zeros(self.dim, self.dim);
        self.dense_mul_into(m, &mut out);
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest entrywise magnitude of `A − A†`.
    pub fn hermitian_deviation(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// True when every stored entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }
}

impl Add for &SparseOperator {
    type Output = SparseOperator;
    fn add(self, rhs: Self) -> SparseOperator {
        self.try_add(rhs).expect("operator dimensions must agree")
    }
}

impl Sub for &SparseOperator {
    type Output = SparseOperator;
    fn sub(self, rhs: Self) -> SparseOperator {
        self.try_sub(rhs).expect("operator dimensions must agree")
    }
}

impl Mul for &SparseOperator {
    type Output = SparseOperator;
    fn mul(self, rhs: Self) -> SparseOperator {
        self.try_mul(rhs).expect("operator dimensions must agree")
    }
}

impl Mul<f64> for &SparseOperator {
    type Output = SparseOperator;
    fn mul(self, rhs: f64) -> SparseOperator {
        self.scale_real(rhs)
    }
}

impl Neg for &SparseOperator {
    type Output = SparseOperator;
    fn neg(self) -> SparseOperator {
        self.scale_real(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn duplicates_are_summed_and_dust_dropped() {
        let op = SparseOperator::from_triplets(
            2,
            [(0, 1, c(1.0)), (0, 1, c(2.0)), (1, 0, c(1e-16)), (1, 1, c(1.0)), (1, 1, c(-1.0))],
        )
        .unwrap();
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.get(0, 1), c(3.0));
    }

    #[test]
    fn out_of_range_entry_rejected() {
        assert!(SparseOperator::from_triplets(2, [(2, 0, c(1.0))]).is_err());
        assert!(SparseOperator::from_triplets(0, std::iter::empty()).is_err());
    }

    #[test]
    fn dense_products_match_sparse_product() {
        let a = SparseOperator::from_triplets(
            3,
            [(0, 1, Complex64::new(1.0, 2.0)), (2, 0, c(-0.5)), (1, 1, c(3.0))],
        )
        .unwrap();
        let m = DMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64 + 1.0, j as f64 - 1.0));
        let am = a.mul_dense(&m).unwrap();
        let ma = a.dense_mul(&m).unwrap();
        let ad = a.to_dense();
        assert!((am - &ad * &m).norm() < 1e-14);
        assert!((ma - &m * &ad).norm() < 1e-14);
        let sq = &a * &a;
        assert!((sq.to_dense() - &ad * &ad).norm() < 1e-14);
    }

    #[test]
    fn kron_orders_leading_factor_slowest() {
        let x = SparseOperator::from_triplets(2, [(0, 1, c(1.0)), (1, 0, c(1.0))]).unwrap();
        let id = SparseOperator::identity(2);
        let k = x.kron(&id);
        assert_eq!(k.get(0, 2), c(1.0));
        assert_eq!(k.get(1, 3), c(1.0));
        assert_eq!(k.get(0, 1), c(0.0));
    }
}
