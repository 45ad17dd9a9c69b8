//! Dense vector helpers on slices and a small row-major matrix type.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Dense matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out = self · x`
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.rows) {
            *o = dot(self.row(r), x);
        }
    }

    /// `out = selfᵀ · y`
    pub fn tr_mul_vec_into(&self, y: &[f64], out: &mut [f64]) {
        out[..self.cols].iter_mut().for_each(|o| *o = 0.0);
        for (r, yr) in y.iter().enumerate().take(self.rows) {
            for (o, m) in out.iter_mut().zip(self.row(r)) {
                *o += m * yr;
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.tr_mul_vec_into(y, &mut out);
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// Ratio of extreme singular values; infinite for a singular matrix.
    pub fn condition_number(&self) -> f64 {
        let sv = self.to_nalgebra().singular_values();
        let max = sv.max();
        let min = sv.min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn spectral_norm(&self) -> f64 {
        self.to_nalgebra().singular_values().max()
    }
}

/// Solves the square system `a · x = b` by LU with partial pivoting.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.rows != a.cols || b.len() != a.rows {
        return Err(Error::DimensionMismatch { expected: a.rows, found: b.len() });
    }
    let lu = a.to_nalgebra().lu();
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = lu.solve(&rhs).ok_or(Error::Singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose_agree() {
        let m = Matrix::from_rows(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.mul_vec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(m.tr_mul_vec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
        assert_eq!(m.transpose().mul_vec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn solve_and_conditioning() {
        let a = Matrix::from_rows(2, 2, vec![2.0, 0.0, 0.0, 4.0]).unwrap();
        assert_eq!(solve(&a, &[2.0, 2.0]).unwrap(), vec![1.0, 0.5]);
        assert!((a.condition_number() - 2.0).abs() < 1e-12);
        assert!(solve(&Matrix::zeros(2, 2), &[1.0, 1.0]).is_err());
        assert!(Matrix::zeros(2, 2).condition_number().is_infinite());
    }
}
