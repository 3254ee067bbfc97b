//! Minimal dense real linear algebra.
//!
//! [`Matrix`] is an immutable row-major `f64` matrix; it is the universal
//! value type for parameters, gradients, momenta, and update directions.
//! Construction validates shape and finiteness, so any `Matrix` in the
//! system holds only finite entries — an operation that would overflow
//! reports [`Error::NonFinite`] instead of propagating infinities.
//!
//! The module deliberately stops far short of a BLAS: products, norms,
//! block stacking, a Newton–Schulz polar iteration, a cyclic-Jacobi
//! symmetric eigensolver, and the exact polar / inverse-square-root
//! oracles built on top of it.

mod eigen;
mod polar;

pub use eigen::{inv_sqrt_psd, symmetric_eig, EigenPair};
pub use polar::{newton_schulz_polar, svd_polar_oracle, NsCoefficients, NS_SCALE_EPS};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Relative eigenvalue floor used wherever a PSD matrix may be singular:
/// eigenvalues below `REL_EIG_FLOOR * lambda_max` are treated as zero
/// energy and floored before inversion.
pub const REL_EIG_FLOOR: f64 = 1e-12;

/// Dense row-major matrix of finite `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting shape/finiteness violations.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter {
                what: "matrix dimension",
                value: 0.0,
            });
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidData {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { op: "Matrix::new" });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidParameter {
                what: "matrix dimension",
                value: 0.0,
            });
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::InvalidData {
                    expected: cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be >= 1");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Diagonal matrix from the given entries.
    pub fn diag(entries: &[f64]) -> Result<Self> {
        let n = entries.len();
        let mut data = vec![0.0; n * n];
        for (i, &v) in entries.iter().enumerate() {
            data[i * n + i] = v;
        }
        Self::new(n, n, data)
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Row-major backing slice.
    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Standard matrix product.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            let a_row = &self.data[i * k..(i + 1) * k];
            let out_row = &mut data[i * n..(i + 1) * n];
            for (p, &a_ip) in a_row.iter().enumerate() {
                if a_ip == 0.0 {
                    continue;
                }
                let b_row = &other.data[p * n..(p + 1) * n];
                for (o, &b_pj) in out_row.iter_mut().zip(b_row) {
                    *o += a_ip * b_pj;
                }
            }
        }
        Matrix::new(m, n, data)
    }

    /// Column-correlation Gram matrix `MᵀM`, symmetrized by averaging with
    /// its transpose so downstream eigensolvers see an exactly symmetric
    /// input.
    pub fn gram_right(&self) -> Matrix {
        let n = self.cols;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for r in 0..self.rows {
                    acc += self.data[r * n + i] * self.data[r * n + j];
                }
                data[i * n + j] = acc;
                data[j * n + i] = acc;
            }
        }
        Matrix {
            rows: n,
            cols: n,
            data,
        }
    }

    /// Row-correlation Gram matrix `MMᵀ`, symmetrized the same way.
    pub fn gram_left(&self) -> Matrix {
        let m = self.rows;
        let c = self.cols;
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let mut acc = 0.0;
                let ri = &self.data[i * c..(i + 1) * c];
                let rj = &self.data[j * c..(j + 1) * c];
                for (a, b) in ri.iter().zip(rj) {
                    acc += a * b;
                }
                data[i * m + j] = acc;
                data[j * m + i] = acc;
            }
        }
        Matrix {
            rows: m,
            cols: m,
            data,
        }
    }

    /// `sqrt(sum of squared entries)`.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, factor: f64) -> Result<Matrix> {
        let data = self.data.iter().map(|v| v * factor).collect();
        Matrix::new(self.rows, self.cols, data).map_err(|_| Error::NonFinite { op: "scale" })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Matrix::new(self.rows, self.cols, data).map_err(|_| Error::NonFinite { op })
    }

    /// Applies `f` entrywise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Matrix> {
        let data = self.data.iter().map(|v| f(*v)).collect();
        Matrix::new(self.rows, self.cols, data).map_err(|_| Error::NonFinite { op: "map" })
    }

    /// Entrywise (Hadamard) product.
    pub fn mul_elem(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "mul_elem", |a, b| a * b)
    }

    /// First `k` rows as a new matrix.
    pub fn top_rows(&self, k: usize) -> Result<Matrix> {
        if k == 0 || k > self.rows {
            return Err(Error::InvalidParameter {
                what: "top_rows count",
                value: k as f64,
            });
        }
        Matrix::new(k, self.cols, self.data[..k * self.cols].to_vec())
    }

    /// First `k` columns as a new matrix.
    pub fn left_cols(&self, k: usize) -> Result<Matrix> {
        if k == 0 || k > self.cols {
            return Err(Error::InvalidParameter {
                what: "left_cols count",
                value: k as f64,
            });
        }
        let mut data = Vec::with_capacity(self.rows * k);
        for i in 0..self.rows {
            data.extend_from_slice(&self.data[i * self.cols..i * self.cols + k]);
        }
        Matrix::new(self.rows, k, data)
    }

    /// Column `j` as a length-`rows` vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    /// `‖M v‖` for a length-`cols` vector `v`.
    pub fn apply_norm(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                op: "apply_norm",
                lhs: self.shape(),
                rhs: (v.len(), 1),
            });
        }
        let mut acc = 0.0;
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let dot: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            acc += dot * dot;
        }
        Ok(acc.sqrt())
    }
}

/// Stacks `a` on top of `b` (shapes must share the column count).
pub fn vstack(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.cols {
        return Err(Error::DimensionMismatch {
            op: "vstack",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Matrix::new(a.rows + b.rows, a.cols, data)
}

/// Places `a` to the left of `b` (shapes must share the row count).
pub fn hstack(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows != b.rows {
        return Err(Error::DimensionMismatch {
            op: "hstack",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    for i in 0..a.rows {
        data.extend_from_slice(&a.data[i * a.cols..(i + 1) * a.cols]);
        data.extend_from_slice(&b.data[i * b.cols..(i + 1) * b.cols]);
    }
    Matrix::new(a.rows, a.cols + b.cols, data)
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            data: self.data.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        Matrix::new(repr.rows, repr.cols, repr.data).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_bad_lengths() {
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::INFINITY]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            Matrix::new(2, 2, vec![1.0; 3]),
            Err(Error::InvalidData { .. })
        ));
        assert!(Matrix::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn matmul_identity_and_hand_sums() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let i = Matrix::identity(2);
        assert_eq!(i.matmul(&a).unwrap(), a);
        assert_eq!(a.matmul(&i).unwrap(), a);

        let row = Matrix::from_rows(&[&[1.0, 1.0]]).unwrap();
        let col = Matrix::from_rows(&[&[1.0], &[1.0]]).unwrap();
        let prod = row.matmul(&col).unwrap();
        assert_eq!(prod.shape(), (1, 1));
        assert_eq!(prod.get(0, 0), 2.0);
    }

    #[test]
    fn matmul_rejects_mismatched_inner_dims() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        assert!(matches!(
            a.matmul(&b),
            Err(Error::DimensionMismatch { op: "matmul", .. })
        ));
    }

    #[test]
    fn gram_right_identity_and_diagonal() {
        let i = Matrix::identity(2);
        assert_eq!(i.gram_right(), Matrix::identity(2));

        let d = Matrix::diag(&[2.0, 3.0]).unwrap();
        assert_eq!(d.gram_right(), Matrix::diag(&[4.0, 9.0]).unwrap());
    }

    #[test]
    fn gram_right_matches_triple_loop() {
        // brute-force oracle: g[i][j] = sum_r m[r][i] * m[r][j]
        let mut rng = crate::problems::Rng::new(11, 0);
        let m = crate::problems::synth::random_matrix(&mut rng, 5, 3);
        let g = m.gram_right();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for r in 0..5 {
                    acc += m.get(r, i) * m.get(r, j);
                }
                assert!((g.get(i, j) - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frobenius_norm_cases() {
        assert_eq!(Matrix::zeros(3, 4).frobenius_norm(), 0.0);
        let m = Matrix::from_rows(&[&[3.0, 4.0]]).unwrap();
        assert!((m.frobenius_norm() - 5.0).abs() < 1e-15);
        assert!((Matrix::identity(3).frobenius_norm() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn stacking_and_slicing_round_trip() {
        let a = Matrix::from_rows(&[&[1.0, 2.0]]).unwrap();
        let b = Matrix::from_rows(&[&[3.0, 4.0]]).unwrap();
        let v = vstack(&a, &b).unwrap();
        assert_eq!(v.shape(), (2, 2));
        assert_eq!(v.top_rows(1).unwrap(), a);

        let h = hstack(&a, &b).unwrap();
        assert_eq!(h.shape(), (1, 4));
        assert_eq!(h.left_cols(2).unwrap(), a);
        assert_eq!(h.get(0, 2), 3.0);
    }

    #[test]
    fn overflow_reports_non_finite() {
        let m = Matrix::from_rows(&[&[1e308]]).unwrap();
        assert!(matches!(m.scale(10.0), Err(Error::NonFinite { .. })));
        assert!(matches!(m.add(&m), Err(Error::NonFinite { .. })));
    }
}
