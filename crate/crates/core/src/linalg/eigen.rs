//! Symmetric eigendecomposition via cyclic Jacobi rotations, plus the
//! PSD inverse square root built on it.

use super::{Matrix, REL_EIG_FLOOR};
use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix: orthonormal eigenvector
/// columns and eigenvalues sorted descending. Negative values within
/// rounding distance of zero are clamped so PSD inputs stay PSD.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub vectors: Matrix,
    pub values: Vec<f64>,
}

impl EigenPair {
    /// Reconstructs `V diag(f(λ)) Vᵀ`, symmetrized.
    pub fn assemble(&self, f: impl Fn(f64) -> f64) -> Result<Matrix> {
        let n = self.values.len();
        let mut scaled = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                scaled.push(self.vectors.get(i, j) * f(self.values[j]));
            }
        }
        let vw = Matrix::new(n, n, scaled)?;
        let prod = vw.matmul(&self.vectors.transpose())?;
        // exact symmetry for downstream consumers
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(0.5 * (prod.get(i, j) + prod.get(j, i)));
            }
        }
        Matrix::new(n, n, data)
    }
}

const MAX_SWEEPS: usize = 100;
const OFF_DIAG_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = a[i * n + j];
                acc += v * v;
            }
        }
    }
    acc.sqrt()
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Sweeps run until the off-diagonal Frobenius mass drops below
/// `1e-12 * ‖s‖_F`. Symmetry is checked against `1e-10` scaled by
/// `max(1, ‖s‖_F)` so large well-formed Gram matrices are not rejected.
pub fn symmetric_eig(s: &Matrix) -> Result<EigenPair> {
    let n = s.rows();
    if s.rows() != s.cols() {
        return Err(Error::NotSquare {
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    let fro = s.frobenius_norm();
    let sym_tol = SYMMETRY_TOL * fro.max(1.0);
    let mut max_asym: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asym = max_asym.max((s.get(i, j) - s.get(j, i)).abs());
        }
    }
    if max_asym > sym_tol {
        return Err(Error::NotSymmetric {
            max_asymmetry: max_asym,
        });
    }

    let mut a: Vec<f64> = s.data().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    if fro > 0.0 {
        let threshold = OFF_DIAG_TOL * fro;
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            if off_diagonal_norm(&a, n) < threshold {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = 0.5 * (aqq - app) / apq;
                    // smaller root of t^2 + 2 t theta - 1 = 0, stable form
                    let t = if theta.abs() > 1e150 {
                        0.5 / theta
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * c;

                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - sn * akq;
                        a[k * n + q] = sn * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - sn * aqk;
                        a[q * n + k] = sn * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - sn * vkq;
                        v[k * n + q] = sn * vkp + c * vkq;
                    }
                }
            }
        }
        if !converged && off_diagonal_norm(&a, n) >= threshold {
            return Err(Error::NoConvergence {
                op: "symmetric_eig",
                iterations: MAX_SWEEPS,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());

    let lam_max_abs = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let clamp = REL_EIG_FLOOR * lam_max_abs.max(1.0);
    let values: Vec<f64> = order
        .iter()
        .map(|&i| {
            let lam = diag[i];
            if lam < 0.0 && lam >= -clamp {
                0.0
            } else {
                lam
            }
        })
        .collect();

    let mut vec_data = vec![0.0; n * n];
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vec_data[i * n + new_j] = v[i * n + old_j];
        }
    }

    Ok(EigenPair {
        vectors: Matrix::new(n, n, vec_data)?,
        values,
    })
}

/// PSD inverse square root: `V diag(max(λ, floor)^{-1/2}) Vᵀ`.
///
/// A `floor` of 0 selects the relative default `1e-12 * λ_max`, which
/// guards singular directions of a rank-deficient Gram. Negative
/// eigenvalues (possible only from rounding on a nominally PSD input)
/// are floored as well.
pub fn inv_sqrt_psd(s: &Matrix, floor: f64) -> Result<Matrix> {
    if !floor.is_finite() || floor < 0.0 {
        return Err(Error::InvalidParameter {
            what: "inv_sqrt_psd floor",
            value: floor,
        });
    }
    let eig = symmetric_eig(s)?;
    let lam_max = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let eff = if floor > 0.0 {
        floor
    } else {
        REL_EIG_FLOOR * lam_max
    };
    if eff <= 0.0 {
        return Err(Error::ZeroMatrix { op: "inv_sqrt_psd" });
    }
    eig.assemble(|lam| 1.0 / lam.max(eff).sqrt())
}
