//! Crate-wide error type.

use std::fmt;

/// Errors produced by linear algebra, optimizer, probe, and problem code.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible for the named operation.
    DimensionMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    /// Raw data length does not match `rows * cols`.
    InvalidData { expected: usize, got: usize },
    /// A NaN or infinity appeared where a finite value is required.
    NonFinite { op: &'static str },
    /// A square matrix was required.
    NotSquare { rows: usize, cols: usize },
    /// A symmetric matrix was required.
    NotSymmetric { max_asymmetry: f64 },
    /// The operation is undefined for an all-zero matrix.
    ZeroMatrix { op: &'static str },
    /// Input is rank-deficient; `dim` names the deficient singular direction.
    RankDeficient {
        dim: usize,
        singular_value: f64,
        threshold: f64,
    },
    /// An iterative method failed to converge.
    NoConvergence { op: &'static str, iterations: usize },
    /// A scalar parameter is out of its documented range.
    InvalidParameter { what: &'static str, value: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { op, lhs, rhs } => write!(
                f,
                "{op}: dimension mismatch, {}x{} vs {}x{}",
                lhs.0, lhs.1, rhs.0, rhs.1
            ),
            Error::InvalidData { expected, got } => {
                write!(f, "data length {got} does not match rows*cols = {expected}")
            }
            Error::NonFinite { op } => write!(f, "{op}: non-finite value"),
            Error::NotSquare { rows, cols } => {
                write!(f, "matrix must be square, got {rows}x{cols}")
            }
            Error::NotSymmetric { max_asymmetry } => {
                write!(f, "matrix is not symmetric (max |a_ij - a_ji| = {max_asymmetry:e})")
            }
            Error::ZeroMatrix { op } => write!(f, "{op}: undefined for an all-zero matrix"),
            Error::RankDeficient {
                dim,
                singular_value,
                threshold,
            } => write!(
                f,
                "rank-deficient input: singular direction {dim} has value {singular_value:e} <= threshold {threshold:e}"
            ),
            Error::NoConvergence { op, iterations } => {
                write!(f, "{op}: no convergence after {iterations} iterations")
            }
            Error::InvalidParameter { what, value } => {
                write!(f, "invalid parameter {what} = {value}")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
