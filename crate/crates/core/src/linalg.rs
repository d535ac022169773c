//! Small dense linear-algebra layer.
//!
//! Vectors are plain `f64` slices; stacked per-agent vectors use
//! [`BlockVector`]. Factorizations and eigenvalues go through `nalgebra`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| if v.abs() > m { v.abs() } else { m })
}

/// `‖a − b‖∞`
pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| if (x - y).abs() > m { (x - y).abs() } else { m })
}

/// `‖a − b‖₂`
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// `p` vectors of common length `n` stored back to back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockVector {
    block_len: usize,
    data: Vec<f64>,
}

impl BlockVector {
    pub fn zeros(blocks: usize, block_len: usize) -> Self {
        Self { block_len, data: vec![0.0; blocks * block_len] }
    }

    pub fn from_blocks(blocks: &[Vec<f64>]) -> Result<Self> {
        let n = blocks.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::InvalidDimensions("empty block".into()));
        }
        let mut data = Vec::with_capacity(blocks.len() * n);
        for b in blocks {
            check_len(n, b.len())?;
            data.extend_from_slice(b);
        }
        Ok(Self { block_len: n, data })
    }

    /// Every block equal to `v`.
    pub fn replicate(v: &[f64], blocks: usize) -> Self {
        let mut data = Vec::with_capacity(blocks * v.len());
        for _ in 0..blocks {
            data.extend_from_slice(v);
        }
        Self { block_len: v.len(), data }
    }

    pub fn from_flat(data: Vec<f64>, block_len: usize) -> Result<Self> {
        if block_len == 0 || data.len() % block_len != 0 {
            return Err(Error::InvalidDimensions("flat length is not a multiple of the block length".into()));
        }
        Ok(Self { block_len, data })
    }

    pub fn num_blocks(&self) -> usize {
        self.data.len() / self.block_len
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[i * self.block_len..(i + 1) * self.block_len]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.block_len..(i + 1) * self.block_len]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.block_len)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_blocks(&self) -> Vec<Vec<f64>> {
        self.blocks().map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn check_shape(&self, blocks: usize, block_len: usize) -> Result<()> {
        check_len(blocks, self.num_blocks())?;
        check_len(block_len, self.block_len)
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_len(cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.set(i, i, *d);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copy of rows `start..end`.
    pub fn row_block(&self, start: usize, end: usize) -> Self {
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// `out = M v`
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, v);
        }
    }

    /// `out = Mᵀ v`
    pub fn tr_mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows);
        out.fill(0.0);
        for (vi, row) in v.iter().zip(self.data.chunks_exact(self.cols)) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += vi * a;
            }
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(v, &mut out);
        out
    }

    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.tr_mul_vec_into(v, &mut out);
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    let eig = m.to_nalgebra().symmetric_eigen();
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Largest eigenvalue of `MᵀM` (the squared spectral norm of `M`) by power
/// iteration.
pub fn gram_spectral_norm(m: &DenseMatrix, tol: f64, max_iters: usize) -> f64 {
    let n = m.cols();
    if n == 0 || m.rows() == 0 {
        return 0.0;
    }
    // Uneven start so no eigenvector of a diagonal Gram matrix is missed.
    let mut v: Vec<f64> = (0..n).map(|j| 1.0 + 1.0 / (j as f64 + 2.0)).collect();
    let scale = norm2(&v);
    v.iter_mut().for_each(|x| *x /= scale);
    let mut mv = vec![0.0; m.rows()];
    let mut w = vec![0.0; n];
    let mut estimate = 0.0;
    for _ in 0..max_iters {
        m.mul_vec_into(&v, &mut mv);
        m.tr_mul_vec_into(&mv, &mut w);
        let next = dot(&v, &w);
        let wn = norm2(&w);
        if wn == 0.0 {
            return 0.0;
        }
        w.iter().zip(v.iter_mut()).for_each(|(a, b)| *b = a / wn);
        if (next - estimate).abs() <= tol * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Least-squares solution of `M x ≈ rhs` through a Householder QR of `M`.
pub fn least_squares(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    check_len(m.rows(), rhs.len())?;
    if m.rows() < m.cols() {
        return Err(Error::InvalidDimensions("fewer rows than columns".into()));
    }
    let qr = m.to_nalgebra().qr();
    let r = qr.r();
    let n = m.cols();
    let max_diag = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    for i in 0..n {
        if r[(i, i)].abs() <= 1e-12 * max_diag || max_diag == 0.0 {
            return Err(Error::RankDeficient { column: i });
        }
    }
    let mut qtb = nalgebra::DVector::from_column_slice(rhs);
    qr.q_tr_mul(&mut qtb);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = qtb[i];
        for j in i + 1..n {
            acc -= r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_iteration_on_diagonal() {
        let m = DenseMatrix::diagonal(&[1.0, 2.0]);
        assert_relative_eq!(gram_spectral_norm(&m, 1e-12, 10_000), 4.0, max_relative = 1e-10);
    }

    #[test]
    fn least_squares_two_observations() {
        let m = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let x = least_squares(&m, &[1.0, 3.0]).unwrap();
        assert_relative_eq!(x[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn least_squares_detects_rank_deficiency() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert!(matches!(least_squares(&m, &[1.0, 2.0, 3.0]), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn transpose_product_matches_definition() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(m.tr_mul_vec(&[1.0, -1.0]), vec![-3.0, -3.0, -3.0]);
        assert_eq!(m.mul_vec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
    }
}
