//! Dense real linear algebra used by the metrics.
//!
//! Everything here works on small-to-medium dense matrices (order up to a
//! few thousand) stored row-major in `Vec<f64>`.

mod cov;
mod eigen;
pub(crate) mod toeplitz;

pub use cov::{mean_and_cov, GaussianStats};
pub use eigen::{psd_sqrt, psd_sqrt_trace, sym_eigen, sym_eigenvalues, EigenDecomposition};
pub use toeplitz::{fir_filter, toeplitz_lstsq};

use thiserror::Error;

/// Default relative threshold below which eigenvalues are zeroed by [`psd_sqrt`].
pub const DEFAULT_CLIP_EPS: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("eigensolver did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("need at least 2 frames, got {0}")]
    InsufficientFrames(usize),
    #[error("normal equations are numerically singular")]
    SingularSystem,
}

/// Square symmetric matrix, row-major.
///
/// Construction averages `a[i][j]` and `a[j][i]`, so the stored entries are
/// exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    pub fn new(order: usize, mut entries: Vec<f64>) -> Result<Self, LinalgError> {
        if order == 0 {
            return Err(LinalgError::Shape("order must be at least 1".into()));
        }
        if entries.len() != order * order {
            return Err(LinalgError::Shape(format!(
                "expected {} entries for order {order}, got {}",
                order * order,
                entries.len()
            )));
        }
        for i in 0..order {
            for j in (i + 1)..order {
                let avg = 0.5 * (entries[i * order + j] + entries[j * order + i]);
                entries[i * order + j] = avg;
                entries[j * order + i] = avg;
            }
        }
        Ok(Self { order, entries })
    }

    pub fn zeros(order: usize) -> Self {
        assert!(order > 0, "order must be at least 1");
        Self {
            order,
            entries: vec![0.0; order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        Self::from_diagonal(&vec![1.0; order])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.entries[i * m.order + i] = v;
        }
        m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.order..(i + 1) * self.order]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    /// `self * other * self`, symmetrized.
    pub fn sandwich(&self, other: &SymMatrix) -> Result<SymMatrix, LinalgError> {
        if self.order != other.order {
            return Err(LinalgError::Shape(format!(
                "order mismatch: {} vs {}",
                self.order, other.order
            )));
        }
        let left = matmul(&self.entries, &other.entries, self.order);
        SymMatrix::new(self.order, matmul(&left, &self.entries, self.order))
    }

    /// Plain matrix product; the result is generally not symmetric.
    pub fn mul(&self, other: &SymMatrix) -> Vec<f64> {
        assert_eq!(self.order, other.order);
        matmul(&self.entries, &other.entries, self.order)
    }
}

/// Row-major square product `a * b`.
pub(crate) fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    let kernel = |(i, row): (usize, &mut [f64])| {
        let a_row = &a[i * n..(i + 1) * n];
        for (k, &aik) in a_row.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let b_row = &b[k * n..(k + 1) * n];
            for (o, &bkj) in row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(n).enumerate().for_each(kernel);
    }
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(n).enumerate().for_each(kernel);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_symmetrizes() {
        let m = SymMatrix::new(2, vec![1.0, 2.0, 4.0, 3.0]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert_eq!(m.trace(), 4.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(SymMatrix::new(0, vec![]), Err(LinalgError::Shape(_))));
        assert!(matches!(SymMatrix::new(2, vec![1.0; 3]), Err(LinalgError::Shape(_))));
    }

    #[test]
    fn sandwich_of_diagonals() {
        let s = SymMatrix::from_diagonal(&[2.0, 3.0]);
        let m = SymMatrix::from_diagonal(&[5.0, 7.0]);
        let p = s.sandwich(&m).unwrap();
        assert_eq!(p.as_slice(), &[20.0, 0.0, 0.0, 63.0]);
    }
}
