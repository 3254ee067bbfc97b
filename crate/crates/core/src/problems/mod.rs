//! Desk-scale test problems with controllable gradient noise.
//!
//! [`NoisyQuadratic`] is an anisotropic quadratic whose stochastic
//! gradient carries independent per-column Gaussian noise, so the
//! gradient covariance is diagonal in a known basis and spectral-gain
//! predictions can be checked against constructed ground truth.
//! [`ToyMlp`] is a two-layer tanh network with hand-written
//! backpropagation, standing in for large structured models.

mod rng;
pub mod synth;

pub use rng::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Quadratic objective `L(W) = 1/2 Σ_j h_j ‖W[:,j]‖²` with per-column
/// curvature `h_j > 0` and per-column gradient noise scale `σ_j ≥ 0`.
///
/// The stochastic gradient is `W diag(h) + E` with `E[i][j] ~ N(0, σ_j²)`;
/// its expectation is the true gradient, and the minimizer is `W = 0`.
#[derive(Debug, Clone)]
pub struct NoisyQuadratic {
    curvature: Vec<f64>,
    noise_scales: Vec<f64>,
    seed: u64,
}

impl NoisyQuadratic {
    pub fn new(curvature: Vec<f64>, noise_scales: Vec<f64>, seed: u64) -> Result<Self> {
        if curvature.is_empty() || curvature.len() != noise_scales.len() {
            return Err(Error::DimensionMismatch {
                op: "NoisyQuadratic::new",
                lhs: (curvature.len(), 1),
                rhs: (noise_scales.len(), 1),
            });
        }
        for &h in &curvature {
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::InvalidParameter {
                    what: "curvature",
                    value: h,
                });
            }
        }
        for &s in &noise_scales {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::InvalidParameter {
                    what: "noise scale",
                    value: s,
                });
            }
        }
        Ok(Self {
            curvature,
            noise_scales,
            seed,
        })
    }

    pub fn cols(&self) -> usize {
        self.curvature.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn noise_scales(&self) -> &[f64] {
        &self.noise_scales
    }

    /// Stochastic gradient `W diag(h) + E`, drawing one Gaussian per entry
    /// (also for σ_j = 0 columns, so draw positions are layout-stable).
    pub fn grad(&self, w: &Matrix, rng: &mut Rng) -> Result<Matrix> {
        self.check_shape(w)?;
        let cols = self.cols();
        let mut data = Vec::with_capacity(w.rows() * cols);
        for i in 0..w.rows() {
            for j in 0..cols {
                let noise = self.noise_scales[j] * rng.next_gaussian();
                data.push(w.get(i, j) * self.curvature[j] + noise);
            }
        }
        Matrix::new(w.rows(), cols, data)
    }

    /// Closed-form objective value.
    pub fn loss(&self, w: &Matrix) -> Result<f64> {
        self.check_shape(w)?;
        let mut acc = 0.0;
        for j in 0..self.cols() {
            let col_sq: f64 = (0..w.rows()).map(|i| w.get(i, j) * w.get(i, j)).sum();
            acc += 0.5 * self.curvature[j] * col_sq;
        }
        Ok(acc)
    }

    fn check_shape(&self, w: &Matrix) -> Result<()> {
        if w.cols() != self.cols() {
            return Err(Error::DimensionMismatch {
                op: "NoisyQuadratic",
                lhs: w.shape(),
                rhs: (w.rows(), self.cols()),
            });
        }
        Ok(())
    }
}

/// Two-layer tanh MLP trained with mean squared error.
#[derive(Debug, Clone)]
pub struct ToyMlp {
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
}

/// Gradients for every MLP parameter, same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
}

impl ToyMlp {
    /// Gaussian init scaled by 1/sqrt(fan_in); biases start at zero.
    pub fn init(d_in: usize, d_hidden: usize, d_out: usize, rng: &mut Rng) -> Self {
        let scale1 = 1.0 / (d_in as f64).sqrt();
        let scale2 = 1.0 / (d_hidden as f64).sqrt();
        let w1 = synth::random_matrix(rng, d_in, d_hidden)
            .scale(scale1)
            .expect("finite");
        let w2 = synth::random_matrix(rng, d_hidden, d_out)
            .scale(scale2)
            .expect("finite");
        Self {
            w1,
            b1: Matrix::zeros(1, d_hidden),
            w2,
            b2: Matrix::zeros(1, d_out),
        }
    }

    pub fn d_in(&self) -> usize {
        self.w1.rows()
    }

    pub fn d_out(&self) -> usize {
        self.w2.cols()
    }

    fn hidden(&self, x: &Matrix) -> Result<Matrix> {
        let z1 = add_row_bias(&x.matmul(&self.w1)?, &self.b1)?;
        z1.map(f64::tanh)
    }

    /// Network output for a batch `x` (rows are samples).
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let a1 = self.hidden(x)?;
        add_row_bias(&a1.matmul(&self.w2)?, &self.b2)
    }

    /// Mean-squared-error loss (mean over all entries of the batch) and
    /// exact analytic gradients for every parameter.
    pub fn loss_and_gradients(&self, x: &Matrix, y: &Matrix) -> Result<(f64, MlpGradients)> {
        if x.rows() == 0 || x.rows() != y.rows() || y.cols() != self.d_out() {
            return Err(Error::DimensionMismatch {
                op: "mlp batch",
                lhs: x.shape(),
                rhs: y.shape(),
            });
        }
        let n = x.rows() as f64;
        let d_out = self.d_out() as f64;

        let a1 = self.hidden(x)?;
        let pred = add_row_bias(&a1.matmul(&self.w2)?, &self.b2)?;
        let resid = pred.sub(y)?;
        let loss = resid.frobenius_norm().powi(2) / (n * d_out);

        // d loss / d pred
        let d_pred = resid.scale(2.0 / (n * d_out))?;
        let grad_w2 = a1.transpose().matmul(&d_pred)?;
        let grad_b2 = column_sums(&d_pred)?;
        let d_a1 = d_pred.matmul(&self.w2.transpose())?;
        // tanh'(z) = 1 - tanh(z)^2, and a1 = tanh(z)
        let d_z1 = d_a1.mul_elem(&a1.map(|a| 1.0 - a * a)?)?;
        let grad_w1 = x.transpose().matmul(&d_z1)?;
        let grad_b1 = column_sums(&d_z1)?;

        Ok((
            loss,
            MlpGradients {
                w1: grad_w1,
                b1: grad_b1,
                w2: grad_w2,
                b2: grad_b2,
            },
        ))
    }

    /// Parameters in a fixed order, with stable names.
    pub fn params(&self) -> [(&'static str, &Matrix); 4] {
        [
            ("w1", &self.w1),
            ("b1", &self.b1),
            ("w2", &self.w2),
            ("b2", &self.b2),
        ]
    }
}

fn add_row_bias(m: &Matrix, bias: &Matrix) -> Result<Matrix> {
    if bias.rows() != 1 || bias.cols() != m.cols() {
        return Err(Error::DimensionMismatch {
            op: "add_row_bias",
            lhs: m.shape(),
            rhs: bias.shape(),
        });
    }
    let mut data = Vec::with_capacity(m.rows() * m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            data.push(m.get(i, j) + bias.get(0, j));
        }
    }
    Matrix::new(m.rows(), m.cols(), data)
}

fn column_sums(m: &Matrix) -> Result<Matrix> {
    let mut sums = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        for (j, s) in sums.iter_mut().enumerate() {
            *s += m.get(i, j);
        }
    }
    Matrix::new(1, m.cols(), sums)
}

/// Synthetic regression data: `X` Gaussian, `Y = X W_teacher + noise`.
///
/// Draw order is fixed (teacher, then X, then noise), so a given
/// `(seed, stream)` always yields the same dataset.
pub fn make_regression_data(
    rng: &mut Rng,
    n: usize,
    d_in: usize,
    d_out: usize,
    teacher_noise: f64,
) -> Result<(Matrix, Matrix)> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            what: "sample count",
            value: 0.0,
        });
    }
    if !teacher_noise.is_finite() || teacher_noise < 0.0 {
        return Err(Error::InvalidParameter {
            what: "teacher noise",
            value: teacher_noise,
        });
    }
    let teacher = synth::random_matrix(rng, d_in, d_out).scale(1.0 / (d_in as f64).sqrt())?;
    let x = synth::random_matrix(rng, n, d_in);
    let mut y = x.matmul(&teacher)?;
    if teacher_noise > 0.0 {
        let noise = synth::random_matrix(rng, n, d_out).scale(teacher_noise)?;
        y = y.add(&noise)?;
    }
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_gradient_is_exact() {
        let p = NoisyQuadratic::new(vec![1.0, 100.0], vec![0.0, 0.0], 0).unwrap();
        let w = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let mut rng = Rng::new(0, 0);
        let g = p.grad(&w, &mut rng).unwrap();
        let want = Matrix::from_rows(&[&[1.0, 200.0], &[3.0, 400.0]]).unwrap();
        assert!(g.sub(&want).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn gradient_mean_matches_clt_bound() {
        let sigma = 2.0;
        let p = NoisyQuadratic::new(vec![1.0, 1.0], vec![sigma, sigma], 0).unwrap();
        let w = Matrix::zeros(1, 2);
        let mut rng = Rng::new(123, 0);
        let n = 10_000;
        let mut mean = [0.0f64; 2];
        for _ in 0..n {
            let g = p.grad(&w, &mut rng).unwrap();
            mean[0] += g.get(0, 0);
            mean[1] += g.get(0, 1);
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let bound = 4.0 * sigma / (n as f64).sqrt();
        assert!(mean[0].abs() < bound && mean[1].abs() < bound);
    }

    #[test]
    fn per_column_variance_matches_ground_truth() {
        let scales = [0.5, 2.0, 7.0];
        let p = NoisyQuadratic::new(vec![1.0; 3], scales.to_vec(), 0).unwrap();
        let w = Matrix::zeros(1, 3);
        let mut rng = Rng::new(77, 0);
        let n = 10_000;
        let mut sq = [0.0f64; 3];
        for _ in 0..n {
            let g = p.grad(&w, &mut rng).unwrap();
            for (j, s) in sq.iter_mut().enumerate() {
                *s += g.get(0, j) * g.get(0, j);
            }
        }
        for (j, &sigma) in scales.iter().enumerate() {
            let var = sq[j] / n as f64;
            let rel = (var - sigma * sigma).abs() / (sigma * sigma);
            assert!(rel < 0.05, "column {j}: relative variance error {rel}");
        }
    }

    #[test]
    fn loss_closed_form_and_gradient_consistency() {
        let p = NoisyQuadratic::new(vec![2.0], vec![0.0], 0).unwrap();
        let w = Matrix::from_rows(&[&[3.0]]).unwrap();
        assert!((p.loss(&w).unwrap() - 9.0).abs() < 1e-12);
        assert_eq!(p.loss(&Matrix::zeros(4, 1)).unwrap(), 0.0);

        // sigma = 0 gradient equals the analytic gradient of the loss
        let q = NoisyQuadratic::new(vec![1.5, 4.0], vec![0.0, 0.0], 0).unwrap();
        let w = Matrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0]]).unwrap();
        let mut rng = Rng::new(0, 0);
        let g = q.grad(&w, &mut rng).unwrap();
        let eps = 1e-6;
        for i in 0..2 {
            for j in 0..2 {
                let mut plus = w.data().to_vec();
                let mut minus = w.data().to_vec();
                plus[i * 2 + j] += eps;
                minus[i * 2 + j] -= eps;
                let lp = q.loss(&Matrix::new(2, 2, plus).unwrap()).unwrap();
                let lm = q.loss(&Matrix::new(2, 2, minus).unwrap()).unwrap();
                let fd = (lp - lm) / (2.0 * eps);
                assert!((fd - g.get(i, j)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn mlp_gradients_match_finite_differences() {
        let mut rng = Rng::new(2024, 0);
        let mlp = ToyMlp::init(5, 7, 3, &mut rng);
        let (x, y) = make_regression_data(&mut rng, 12, 5, 3, 0.1).unwrap();
        let (_, grads) = mlp.loss_and_gradients(&x, &y).unwrap();

        let eps = 1e-5;
        let check = |name: &str, analytic: &Matrix, param_of: &dyn Fn(Matrix) -> ToyMlp| {
            let base = match name {
                "w1" => &mlp.w1,
                "b1" => &mlp.b1,
                "w2" => &mlp.w2,
                _ => &mlp.b2,
            };
            for idx in 0..base.data().len() {
                let mut plus = base.data().to_vec();
                let mut minus = base.data().to_vec();
                plus[idx] += eps;
                minus[idx] -= eps;
                let lp = param_of(Matrix::new(base.rows(), base.cols(), plus).unwrap())
                    .loss_and_gradients(&x, &y)
                    .unwrap()
                    .0;
                let lm = param_of(Matrix::new(base.rows(), base.cols(), minus).unwrap())
                    .loss_and_gradients(&x, &y)
                    .unwrap()
                    .0;
                let fd = (lp - lm) / (2.0 * eps);
                let a = analytic.data()[idx];
                let rel = (fd - a).abs() / a.abs().max(1e-4);
                assert!(rel < 1e-5, "{name}[{idx}]: analytic {a}, fd {fd}");
            }
        };

        check("w1", &grads.w1, &|m| ToyMlp { w1: m, ..mlp.clone() });
        check("b1", &grads.b1, &|m| ToyMlp { b1: m, ..mlp.clone() });
        check("w2", &grads.w2, &|m| ToyMlp { w2: m, ..mlp.clone() });
        check("b2", &grads.b2, &|m| ToyMlp { b2: m, ..mlp.clone() });
    }

    #[test]
    fn zero_weights_zero_targets_propagation() {
        let mlp = ToyMlp {
            w1: Matrix::zeros(3, 4),
            b1: Matrix::zeros(1, 4),
            w2: Matrix::zeros(4, 2),
            b2: Matrix::zeros(1, 2),
        };
        let mut rng = Rng::new(5, 0);
        let x = synth::random_matrix(&mut rng, 6, 3);
        let y = Matrix::zeros(6, 2);
        let (loss, grads) = mlp.loss_and_gradients(&x, &y).unwrap();
        // hidden activations are tanh(0) = 0, so predictions and w2 grads vanish
        assert_eq!(loss, 0.0);
        assert!(grads.w2.is_zero());
    }

    #[test]
    fn duplicating_the_batch_changes_nothing() {
        let mut rng = Rng::new(6, 0);
        let mlp = ToyMlp::init(4, 5, 2, &mut rng);
        let (x, y) = make_regression_data(&mut rng, 8, 4, 2, 0.3).unwrap();

        let doubled_x = crate::linalg::vstack(&x, &x).unwrap();
        let doubled_y = crate::linalg::vstack(&y, &y).unwrap();

        let (l1, g1) = mlp.loss_and_gradients(&x, &y).unwrap();
        let (l2, g2) = mlp.loss_and_gradients(&doubled_x, &doubled_y).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        assert!(g1.w1.sub(&g2.w1).unwrap().max_abs() < 1e-12);
        assert!(g1.b2.sub(&g2.b2).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn regression_data_is_deterministic_per_stream() {
        let (x1, y1) = make_regression_data(&mut Rng::new(9, 3), 10, 4, 2, 0.1).unwrap();
        let (x2, y2) = make_regression_data(&mut Rng::new(9, 3), 10, 4, 2, 0.1).unwrap();
        assert_eq!(x1, x2);
        assert_eq!(y1, y2);

        let (x3, _) = make_regression_data(&mut Rng::new(9, 4), 10, 4, 2, 0.1).unwrap();
        assert_ne!(x1, x3);
    }

    #[test]
    fn noiseless_teacher_is_realizable() {
        // with zero noise a linear student fit by least squares reaches ~0 loss
        let (x, y) = make_regression_data(&mut Rng::new(11, 0), 20, 3, 2, 0.0).unwrap();
        let gram = x.gram_right();
        let inv_sqrt = crate::linalg::inv_sqrt_psd(&gram, 0.0).unwrap();
        let gram_inv = inv_sqrt.matmul(&inv_sqrt).unwrap();
        let w_hat = gram_inv.matmul(&x.transpose().matmul(&y).unwrap()).unwrap();
        let resid = x.matmul(&w_hat).unwrap().sub(&y).unwrap();
        assert!(resid.frobenius_norm() < 1e-8, "residual {}", resid.frobenius_norm());
    }
}
