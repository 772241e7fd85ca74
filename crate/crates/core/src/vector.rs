//! Small dense helpers for the per-agent action vectors.

use serde::{Deserialize, Serialize};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = scale;
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { dim, data }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| dot(&self.data[i * self.dim..(i + 1) * self.dim], x))
            .collect()
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j) * x[i]).sum())
            .collect()
    }

    pub fn is_well_formed(&self) -> bool {
        self.data.len() == self.dim * self.dim && self.data.iter().all(|v| v.is_finite())
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }
}
