//! Dense LU solve with partial pivoting and residual reporting.
//!
//! Factorization is delegated to `faer`; pivot screening and the residual
//! acceptance test are done here.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, MatRef};
use thiserror::Error;

/// Pivots smaller than this fraction of the largest entry in their column are
/// treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-13;

/// Largest accepted `‖Ax − b‖∞ / ‖b‖∞`.
pub const MAX_RELATIVE_RESIDUAL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("matrix is {rows}x{cols} but the right-hand side has {rhs} entries")]
    DimensionMismatch { rows: usize, cols: usize, rhs: usize },
    #[error("system contains non-finite entries")]
    NonFinite,
    #[error("singular matrix: pivot {pivot:e} in column {column} (column scale {scale:e})")]
    SingularMatrix { column: usize, pivot: f64, scale: f64 },
    #[error("relative residual {relative:e} exceeds {limit:e}")]
    ResidualTooLarge { relative: f64, limit: f64 },
}

/// Square system `matrix · x = rhs`, matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSystem {
    n: usize,
    matrix: Vec<f64>,
    rhs: Vec<f64>,
}

impl DenseSystem {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            matrix: vec![0.0; n * n],
            rhs: vec![0.0; n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], rhs: Vec<f64>) -> Result<Self, SolveError> {
        let n = rows.len();
        if rhs.len() != n {
            return Err(SolveError::DimensionMismatch { rows: n, cols: n, rhs: rhs.len() });
        }
        let mut matrix = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(SolveError::DimensionMismatch { rows: n, cols: row.len(), rhs: n });
            }
            matrix.extend_from_slice(row);
        }
        Ok(Self { n, matrix, rhs })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.matrix[i * self.n + j] = value;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        self.matrix[i * self.n + j] += value;
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn rhs_mut(&mut self) -> &mut [f64] {
        &mut self.rhs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.n..(i + 1) * self.n]
    }

    /// Matrix-vector product with the system matrix.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Same system with rows (and rhs entries) reordered: new row `k` is old row `perm[k]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.n);
        for (k, &src) in perm.iter().enumerate() {
            out.matrix[k * self.n..(k + 1) * self.n].copy_from_slice(self.row(src));
            out.rhs[k] = self.rhs[src];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    /// `‖Ax − b‖∞`.
    pub residual_norm: f64,
    /// `‖Ax − b‖∞ / ‖b‖∞`, or the absolute residual when `b = 0`.
    pub relative_residual: f64,
}

pub fn solve(sys: &DenseSystem) -> Result<Solution, SolveError> {
    let n = sys.n;
    if sys.matrix.len() != n * n || sys.rhs.len() != n {
        return Err(SolveError::DimensionMismatch {
            rows: n,
            cols: sys.matrix.len() / n.max(1),
            rhs: sys.rhs.len(),
        });
    }
    if sys.matrix.iter().chain(&sys.rhs).any(|v| !v.is_finite()) {
        return Err(SolveError::NonFinite);
    }
    if n == 0 {
        return Ok(Solution { x: vec![], residual_norm: 0.0, relative_residual: 0.0 });
    }

    let a = MatRef::from_row_major_slice(&sys.matrix, n, n);
    let lu = PartialPivLu::new(a);

    let u = lu.U();
    for k in 0..n {
        let scale = (0..n).map(|i| sys.get(i, k).abs()).fold(0.0, f64::max);
        let pivot = u[(k, k)];
        if scale == 0.0 || pivot.abs() <= PIVOT_TOLERANCE * scale {
            return Err(SolveError::SingularMatrix { column: k, pivot, scale });
        }
    }

    let b = Mat::<f64>::from_fn(n, 1, |i, _| sys.rhs[i]);
    let sol = lu.solve(&b);
    let x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFinite);
    }

    let ax = sys.apply(&x);
    let residual_norm = ax
        .iter()
        .zip(&sys.rhs)
        .map(|(l, r)| (l - r).abs())
        .fold(0.0, f64::max);
    let b_norm = sys.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let relative_residual = if b_norm > 0.0 { residual_norm / b_norm } else { residual_norm };
    if relative_residual > MAX_RELATIVE_RESIDUAL {
        return Err(SolveError::ResidualTooLarge {
            relative: relative_residual,
            limit: MAX_RELATIVE_RESIDUAL,
        });
    }
    Ok(Solution { x, residual_norm, relative_residual })
}
