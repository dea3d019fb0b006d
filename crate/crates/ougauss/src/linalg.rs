//! Dense symmetric factorization for covariance matrices.
//!
//! Row-major lower-triangular Cholesky with a jitter ladder: grids up to a
//! few thousand points factor in seconds, and the factor is reused across
//! replications.

use crate::error::{Error, Result};
use rayon::prelude::*;

/// Lower-triangular Cholesky factor of a symmetric positive (semi)definite
/// matrix, with the diagonal jitter that was needed to factor it.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    rows: Vec<Vec<f64>>,
    jitter: f64,
}

/// Relative jitter ladder applied to the diagonal on factorization failure.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

impl CholeskyFactor {
    /// Factor `gram` (given as full symmetric rows), escalating jitter until
    /// the factorization succeeds or the ladder is exhausted.
    pub fn factor(gram: &[Vec<f64>]) -> Result<Self> {
        let n = gram.len();
        let max_diag = gram
            .iter()
            .enumerate()
            .map(|(i, r)| r[i])
            .fold(0.0f64, f64::max);
        for &rel in JITTER_LADDER.iter() {
            let jitter = rel * max_diag;
            if let Some(rows) = try_cholesky(gram, jitter) {
                return Ok(CholeskyFactor { n, rows, jitter });
            }
        }
        Err(Error::Factorization {
            min_eigenvalue: min_eigenvalue_estimate(gram),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// y = L z.
    pub fn matvec(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.n);
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| dot(&row[..=i], &z[..=i]))
            .collect()
    }

    /// Solve L y = b.
    pub fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let s = dot(&self.rows[i][..i], &y[..i]);
            y[i] = (b[i] - s) / self.rows[i][i];
        }
        y
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.rows[i][i]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn try_cholesky(gram: &[Vec<f64>], jitter: f64) -> Option<Vec<Vec<f64>>> {
    let n = gram.len();
    let mut rows: Vec<Vec<f64>> = (0..n).map(|i| gram[i][..=i].to_vec()).collect();
    let mut pivot_row = Vec::with_capacity(n);
    for j in 0..n {
        let d = rows[j][j] + jitter - dot(&rows[j][..j], &rows[j][..j]);
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        rows[j][j] = ljj;
        pivot_row.clear();
        pivot_row.extend_from_slice(&rows[j][..j]);
        let pivot = &pivot_row;
        rows[j + 1..].par_iter_mut().for_each(|row| {
            let s = dot(&row[..j], pivot);
            row[j] = (row[j] - s) / ljj;
        });
    }
    Some(rows)
}

/// Smallest eigenvalue, estimated by power iteration on sigma*I - A with a
/// Gershgorin shift. Used only for the failure diagnostic.
pub fn min_eigenvalue_estimate(gram: &[Vec<f64>]) -> f64 {
    let n = gram.len();
    if n == 0 {
        return 0.0;
    }
    let sigma = gram
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.7).sin()).collect();
    let mut lambda = 0.0;
    for _ in 0..300 {
        // w = (sigma I - A) v
        let w: Vec<f64> = (0..n)
            .map(|i| sigma * v[i] - dot(&gram[i], &v))
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return sigma;
        }
        lambda = norm;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    sigma - lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn factor_and_matvec_roundtrip() {
        let gram = vec![
            vec![4.0, 2.0, 0.6],
            vec![2.0, 5.0, 1.0],
            vec![0.6, 1.0, 3.0],
        ];
        let f = CholeskyFactor::factor(&gram).unwrap();
        assert_eq!(f.jitter(), 0.0);
        // L L^T == gram
        for i in 0..3 {
            for j in 0..=i {
                let v: f64 = (0..=j).map(|k| f.rows[i][k] * f.rows[j][k]).sum();
                assert_relative_eq!(v, gram[i][j], max_relative = 1e-12);
            }
        }
        let y = f.matvec(&[1.0, -2.0, 0.5]);
        let x = f.forward_solve(&y);
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(x[1], -2.0, max_relative = 1e-12);
        assert_relative_eq!(x[2], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn indefinite_matrix_reports_min_eigenvalue() {
        let gram = vec![vec![1.0, 2.0], vec![2.0, 1.0]]; // eigenvalues 3, -1
        match CholeskyFactor::factor(&gram) {
            Err(Error::Factorization { min_eigenvalue }) => {
                assert_relative_eq!(min_eigenvalue, -1.0, epsilon = 1e-6);
            }
            other => panic!("expected factorization failure, got {other:?}"),
        }
    }

    #[test]
    fn semidefinite_succeeds_with_jitter() {
        // rank-1 matrix
        let gram = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let f = CholeskyFactor::factor(&gram).unwrap();
        assert!(f.jitter() > 0.0);
    }
}
