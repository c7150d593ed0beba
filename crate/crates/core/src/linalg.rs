//! Dense row-major matrices and the few linear-algebra kernels the crate needs.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};

/// Dense row-major matrix of `f64`.
///
/// Synaptic parameter matrices use the `(m + n) x m` layout: row `j` is the
/// presynaptic index into `y = [h, x]`, column `i` the postsynaptic neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Builds a matrix from row-major data, rejecting ragged or non-finite input.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("Matrix::from_vec", rows * cols, data.len())?;
        check_finite("Matrix::from_vec", &data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            check_len("Matrix::from_rows", cols, row.len())?;
            data.extend_from_slice(row);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// `self * x` for `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `x^T * self` for `x` of length `rows`, i.e. `out_c = sum_r x_r a_rc`.
    pub fn vecmat(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &xr) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += xr * a;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_len("Matrix::matmul", self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse(a: &Matrix) -> Result<Matrix> {
    let n = a.rows;
    check_len("inverse of a square matrix", n, a.cols)?;
    let mut work = a.clone();
    let mut inv = Matrix::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 });
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| work.get(i, col).abs().total_cmp(&work.get(j, col).abs()))
            .expect("non-empty range");
        let pv = work.get(pivot, col);
        if pv.abs() < 1e-300 {
            return Err(Error::InvalidArgument("matrix is singular".into()));
        }
        for c in 0..n {
            work.data.swap(col * n + c, pivot * n + c);
            inv.data.swap(col * n + c, pivot * n + c);
        }
        for c in 0..n {
            work.data[col * n + c] /= pv;
            inv.data[col * n + c] /= pv;
        }
        for r in 0..n {
            if r != col {
                let f = work.get(r, col);
                if f != 0.0 {
                    for c in 0..n {
                        work.data[r * n + c] -= f * work.data[col * n + c];
                        inv.data[r * n + c] -= f * inv.data[col * n + c];
                    }
                }
            }
        }
    }
    Ok(inv)
}

/// Left pseudo-inverse `(A^T A)^-1 A^T` of a matrix with full column rank.
pub fn left_pseudo_inverse(a: &Matrix) -> Result<Matrix> {
    let at = a.transpose();
    inverse(&at.matmul(a)?)?.matmul(&at)
}

/// Largest singular value of `a` by power iteration on `a^T a`.
///
/// Stops when successive estimates of `sigma^2` agree to `rel_tol` (relative).
pub fn spectral_norm(a: &Matrix, rel_tol: f64, max_iter: usize) -> Result<f64> {
    if a.data.iter().all(|&v| v == 0.0) || a.rows == 0 || a.cols == 0 {
        return Ok(0.0);
    }
    let ata = a.transpose().matmul(a)?;
    let n = ata.rows;
    // A fixed, non-degenerate start vector keeps the result deterministic; the
    // small ramp avoids starting orthogonal to the dominant eigenvector of
    // highly structured matrices.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * i as f64).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        let w = ata.matvec(&v);
        let next = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return Ok(0.0);
        }
        v = w.into_iter().map(|x| x / nw).collect();
        if (next - estimate).abs() <= rel_tol * next.abs() {
            // Rayleigh quotient with the updated vector.
            let w = ata.matvec(&v);
            return Ok(dot(&v, &w).max(0.0).sqrt());
        }
        estimate = next;
    }
    Err(Error::PowerIteration {
        iterations: max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_ragged() {
        assert!(Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn matvec_and_vecmat_agree_with_transpose() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(a.matvec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(a.vecmat(&[1.0, -1.0]), a.transpose().matvec(&[1.0, -1.0]));
    }

    #[test]
    fn pseudo_inverse_is_a_left_inverse() {
        let a = Matrix::from_fn(5, 2, |r, c| {
            ((r * 2 + c) as f64 * 0.9).sin() + if r == c { 2.0 } else { 0.0 }
        });
        let p = left_pseudo_inverse(&a).unwrap();
        let id = p.matmul(&a).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!((id.get(r, c) - if r == c { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!(inverse(&Matrix::zeros(2, 2)).is_err());
        let b = Matrix::from_rows(&[vec![0.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let bi = inverse(&b).unwrap();
        assert_eq!(
            bi.matmul(&b).unwrap(),
            Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
        );
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -5.0]]).unwrap();
        let s = spectral_norm(&a, 1e-12, 10_000).unwrap();
        assert!((s - 5.0).abs() < 1e-9);
        assert_eq!(spectral_norm(&Matrix::zeros(2, 3), 1e-10, 10).unwrap(), 0.0);
    }
}
