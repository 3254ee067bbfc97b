//! AdamW for unstructured parameters (biases, gains, anything not worth
//! a spectral update).

use super::state::AdamWState;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.95,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

impl AdamWConfig {
    pub fn validate(&self) -> Result<()> {
        for (what, v, lo, hi) in [
            ("adamw beta1", self.beta1, 0.0, 1.0),
            ("adamw beta2", self.beta2, 0.0, 1.0),
        ] {
            if !v.is_finite() || v < lo || v >= hi {
                return Err(Error::InvalidParameter { what, value: v });
            }
        }
        if !self.eps.is_finite() || self.eps < 0.0 {
            return Err(Error::InvalidParameter {
                what: "adamw eps",
                value: self.eps,
            });
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(Error::InvalidParameter {
                what: "adamw weight_decay",
                value: self.weight_decay,
            });
        }
        Ok(())
    }
}

/// One bias-corrected AdamW step with decoupled weight decay. Returns the
/// updated parameter; `state` advances in place.
pub fn adamw_step(
    param: &Matrix,
    grad: &Matrix,
    state: &mut AdamWState,
    cfg: &AdamWConfig,
    lr: f64,
) -> Result<Matrix> {
    if param.shape() != grad.shape() || param.shape() != state.first_moment.shape() {
        return Err(Error::DimensionMismatch {
            op: "adamw_step",
            lhs: param.shape(),
            rhs: grad.shape(),
        });
    }
    if !lr.is_finite() || lr < 0.0 {
        return Err(Error::InvalidParameter {
            what: "learning rate",
            value: lr,
        });
    }

    state.step_count += 1;
    let t = state.step_count;

    state.first_moment = state
        .first_moment
        .scale(cfg.beta1)?
        .add(&grad.scale(1.0 - cfg.beta1)?)?;
    let grad_sq = grad.mul_elem(grad)?;
    state.second_moment = state
        .second_moment
        .scale(cfg.beta2)?
        .add(&grad_sq.scale(1.0 - cfg.beta2)?)?;

    let bias1 = 1.0 - cfg.beta1.powi(t as i32);
    let bias2 = 1.0 - cfg.beta2.powi(t as i32);

    let mut direction = Vec::with_capacity(param.data().len());
    for (m, v) in state.first_moment.data().iter().zip(state.second_moment.data()) {
        let m_hat = m / bias1;
        let v_hat = v / bias2;
        direction.push(m_hat / (v_hat.sqrt() + cfg.eps));
    }
    let direction = Matrix::new(param.rows(), param.cols(), direction)
        .map_err(|_| Error::NonFinite { op: "adamw_step" })?;

    param
        .scale(1.0 - lr * cfg.weight_decay)?
        .sub(&direction.scale(lr)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_only_decays() {
        let cfg = AdamWConfig {
            weight_decay: 0.1,
            ..AdamWConfig::default()
        };
        let mut state = AdamWState::new(1, 2);
        let p0 = Matrix::from_rows(&[&[1.0, -2.0]]).unwrap();
        let g = Matrix::zeros(1, 2);
        let p1 = adamw_step(&p0, &g, &mut state, &cfg, 0.5).unwrap();
        let want = p0.scale(1.0 - 0.5 * 0.1).unwrap();
        assert!(p1.sub(&want).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn first_step_direction_is_unit_for_unit_gradient() {
        // bias correction cancels: m_hat = v_hat = g at t = 1, eps = 0
        let cfg = AdamWConfig {
            beta1: 0.9,
            beta2: 0.95,
            eps: 0.0,
            weight_decay: 0.0,
        };
        let mut state = AdamWState::new(1, 1);
        let p0 = Matrix::from_rows(&[&[0.0]]).unwrap();
        let g = Matrix::from_rows(&[&[1.0]]).unwrap();
        let p1 = adamw_step(&p0, &g, &mut state, &cfg, 0.3).unwrap();
        assert!((p1.get(0, 0) + 0.3).abs() < 1e-12);
    }

    #[test]
    fn constant_gradient_update_magnitude_approaches_lr() {
        // for a constant gradient, m_hat/sqrt(v_hat) -> 1, so the per-step
        // displacement approaches lr regardless of the gradient's size
        let cfg = AdamWConfig::default();
        let mut state = AdamWState::new(1, 1);
        let mut p = Matrix::from_rows(&[&[100.0]]).unwrap();
        let g = Matrix::from_rows(&[&[3.7]]).unwrap();
        let lr = 0.01;
        let mut last_delta = 0.0;
        for _ in 0..500 {
            let next = adamw_step(&p, &g, &mut state, &cfg, lr).unwrap();
            last_delta = (next.get(0, 0) - p.get(0, 0)).abs();
            p = next;
        }
        assert!((last_delta - lr).abs() < 1e-6, "delta {last_delta}");
    }
}
