//! Learning-rate schedule and global gradient clipping.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Linear warmup followed by cosine annealing.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub warmup_steps: u64,
    pub total_steps: u64,
    pub lr_max: f64,
    pub lr_final: f64,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 {
            return Err(Error::InvalidParameter {
                what: "schedule total_steps",
                value: 0.0,
            });
        }
        if self.warmup_steps > self.total_steps {
            return Err(Error::InvalidParameter {
                what: "schedule warmup_steps",
                value: self.warmup_steps as f64,
            });
        }
        for (what, v) in [("lr_max", self.lr_max), ("lr_final", self.lr_final)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter { what, value: v });
            }
        }
        Ok(())
    }
}

/// Learning rate at `step`: 0 → lr_max linearly over the warmup, then
/// `lr_final + (lr_max - lr_final)(1 + cos(pi * progress))/2`. Steps past
/// `total_steps` clamp to `lr_final`.
pub fn cosine_schedule(step: u64, sched: &Schedule) -> f64 {
    if step >= sched.total_steps {
        return sched.lr_final;
    }
    if step < sched.warmup_steps {
        return sched.lr_max * step as f64 / sched.warmup_steps as f64;
    }
    let span = (sched.total_steps - sched.warmup_steps) as f64;
    let progress = (step - sched.warmup_steps) as f64 / span;
    sched.lr_final + 0.5 * (sched.lr_max - sched.lr_final) * (1.0 + (std::f64::consts::PI * progress).cos())
}

/// Scales every gradient by `threshold / norm` when the global norm
/// `sqrt(Σ ‖G_i‖_F²)` exceeds the threshold. Returns the (possibly
/// rescaled) gradients and the observed pre-clip norm.
pub fn clip_gradients(grads: &[Matrix], threshold: f64) -> Result<(Vec<Matrix>, f64)> {
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::InvalidParameter {
            what: "clip threshold",
            value: threshold,
        });
    }
    let norm = global_norm(grads);
    if norm <= threshold {
        return Ok((grads.to_vec(), norm));
    }
    let factor = threshold / norm;
    let clipped = grads
        .iter()
        .map(|g| g.scale(factor))
        .collect::<Result<Vec<_>>>()?;
    Ok((clipped, norm))
}

/// `sqrt(Σ ‖G_i‖_F²)` over a parameter group.
pub fn global_norm(ms: &[Matrix]) -> f64 {
    ms.iter()
        .map(|m| {
            let f = m.frobenius_norm();
            f * f
        })
        .sum::<f64>()
        .sqrt()
}
