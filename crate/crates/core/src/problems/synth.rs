//! Seeded synthesis of random matrices, including spectra with a
//! prescribed condition number, for tests and experiments.

use super::Rng;
use crate::error::Result;
use crate::linalg::{svd_polar_oracle, Matrix};

/// Matrix with i.i.d. standard normal entries.
pub fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.next_gaussian()).collect();
    Matrix::new(rows, cols, data).expect("gaussian draws are finite")
}

/// Haar-distributed orthogonal matrix: the polar factor of a Ginibre draw.
pub fn random_orthogonal(rng: &mut Rng, n: usize) -> Result<Matrix> {
    loop {
        let g = random_matrix(rng, n, n);
        // square gaussians are almost surely far from rank-deficient;
        // retry on the pathological draw rather than propagate
        match svd_polar_oracle(&g) {
            Ok(q) => return Ok(q),
            Err(crate::error::Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Random matrix with log-spaced singular values spanning exactly the
/// given condition number (largest singular value 1).
pub fn random_conditioned(rng: &mut Rng, rows: usize, cols: usize, cond: f64) -> Result<Matrix> {
    let k = rows.min(cols);
    let mut singulars = Vec::with_capacity(k);
    for i in 0..k {
        let t = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
        singulars.push((1.0 / cond).powf(t));
    }
    let u = random_orthogonal(rng, rows)?.left_cols(k)?;
    let v = random_orthogonal(rng, cols)?.left_cols(k)?;
    let us = u.matmul(&Matrix::diag(&singulars)?)?;
    us.matmul(&v.transpose())
}

/// Unit vector of length `n` drawn uniformly on the sphere.
pub fn random_unit_vector(rng: &mut Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
