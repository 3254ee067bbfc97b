//! Per-parameter optimizer state and its checkpoint serialization.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use serde::{Deserialize, Serialize};

/// State for the spectral optimizers (PRISM, Muon, Tikhonov): exactly one
/// parameter-shaped momentum matrix plus a step counter. There is no
/// second-moment or Gram history — the binary blob size is pinned by a
/// test as `3 * 8 + 8 * rows * cols` bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralState {
    momentum: Matrix,
    step_count: u64,
}

impl SpectralState {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            momentum: Matrix::zeros(rows, cols),
            step_count: 0,
        }
    }

    pub fn momentum(&self) -> &Matrix {
        &self.momentum
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub(crate) fn replace_momentum(&mut self, momentum: Matrix) {
        self.momentum = momentum;
        self.step_count += 1;
    }

    /// Flat binary blob: `[rows u64][cols u64][row-major f64 data][step u64]`,
    /// all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (rows, cols) = self.momentum.shape();
        let mut out = Vec::with_capacity(24 + 8 * rows * cols);
        out.extend_from_slice(&(rows as u64).to_le_bytes());
        out.extend_from_slice(&(cols as u64).to_le_bytes());
        for v in self.momentum.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.step_count.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let take_u64 = |b: &[u8], at: usize| -> Result<u64> {
            let chunk: [u8; 8] = b
                .get(at..at + 8)
                .and_then(|s| s.try_into().ok())
                .ok_or(Error::InvalidData {
                    expected: at + 8,
                    got: b.len(),
                })?;
            Ok(u64::from_le_bytes(chunk))
        };
        let rows = take_u64(bytes, 0)? as usize;
        let cols = take_u64(bytes, 8)? as usize;
        let expected = 24 + 8 * rows * cols;
        if bytes.len() != expected {
            return Err(Error::InvalidData {
                expected,
                got: bytes.len(),
            });
        }
        let mut data = Vec::with_capacity(rows * cols);
        for idx in 0..rows * cols {
            let at = 16 + idx * 8;
            let chunk: [u8; 8] = bytes[at..at + 8].try_into().unwrap();
            data.push(f64::from_le_bytes(chunk));
        }
        let step_count = take_u64(bytes, 16 + 8 * rows * cols)?;
        Ok(Self {
            momentum: Matrix::new(rows, cols, data)?,
            step_count,
        })
    }
}

/// AdamW state: two parameter-shaped moment accumulators plus the counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamWState {
    pub(crate) first_moment: Matrix,
    pub(crate) second_moment: Matrix,
    pub(crate) step_count: u64,
}

impl AdamWState {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            first_moment: Matrix::zeros(rows, cols),
            second_moment: Matrix::zeros(rows, cols),
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}
