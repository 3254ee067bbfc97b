//! Optimizer algorithms: PRISM, Muon, Tikhonov-damped Muon, and AdamW,
//! plus schedules, clipping, weight decay, and parameter grouping.
//!
//! PRISM's update direction is the top (or left) block of the polar
//! factor of the innovation-augmented momentum: stack the momentum `M`
//! with the scaled innovation `γD` (where `D = G - M`), orthogonalize the
//! block, and slice. In exact polar mode this equals
//! `M (MᵀM + γ² DᵀD)^{-1/2}`, i.e. a covariance-corrected whitening of
//! the momentum; Muon is the γ = 0 special case, and Tikhonov damping
//! replaces `γ² DᵀD` with `λI`.

mod adamw;
mod schedule;
mod state;

pub use adamw::{adamw_step, AdamWConfig};
pub use schedule::{clip_gradients, cosine_schedule, global_norm, Schedule};
pub use state::{AdamWState, SpectralState};

use crate::error::{Error, Result};
use crate::linalg::{
    hstack, inv_sqrt_psd, newton_schulz_polar, vstack, Matrix, NsCoefficients,
};

/// Which dimension the innovation block is stacked along, i.e. which
/// correlation structure the implicit preconditioner targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Stack `[M; γD]` (2m × n): column correlations, `(MᵀM + γ²DᵀD)^{-1/2}`
    /// applied on the right. The Gram product stays at the smaller
    /// dimension for tall parameters.
    Right,
    /// Stack `[M, γD]` (m × 2n): row correlations, `(MMᵀ + γ²DDᵀ)^{-1/2}`
    /// applied on the left.
    Left,
}

/// How the polar factor is computed.
#[derive(Debug, Clone, PartialEq)]
pub enum PolarMode {
    /// Exact, via symmetric eigendecomposition with a relative eigenvalue
    /// floor on singular directions. The verification mode.
    Exact,
    /// Newton–Schulz iteration with the given schedule. The shipped mode.
    Iterative(NsCoefficients),
}

/// Optional dimension-based learning-rate multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrScaleMode {
    None,
    /// `coeff * sqrt(max(rows, cols))`. Convention with `coeff = 0.2`,
    /// matching the RMS of AdamW updates; off by default.
    DimScaled { coeff: f64 },
}

/// PRISM hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PrismConfig {
    /// Momentum EMA coefficient in [0, 1).
    pub beta: f64,
    /// Innovation damping coefficient γ ≥ 0; γ = 0 reduces to Muon.
    pub gamma: f64,
    /// Feed `βM + (1-β)G` instead of `M` to the polar step.
    pub nesterov: bool,
    pub side: Side,
    pub polar_mode: PolarMode,
    pub lr_scale_mode: LrScaleMode,
    pub weight_decay: f64,
}

impl Default for PrismConfig {
    fn default() -> Self {
        Self {
            beta: 0.95,
            gamma: 1.0,
            nesterov: false,
            side: Side::Right,
            polar_mode: PolarMode::Iterative(NsCoefficients::quintic()),
            lr_scale_mode: LrScaleMode::None,
            weight_decay: 0.0,
        }
    }
}

impl PrismConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter {
                what: "beta",
                value: self.beta,
            });
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::InvalidParameter {
                what: "gamma",
                value: self.gamma,
            });
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(Error::InvalidParameter {
                what: "weight_decay",
                value: self.weight_decay,
            });
        }
        if let LrScaleMode::DimScaled { coeff } = self.lr_scale_mode {
            if !coeff.is_finite() || coeff <= 0.0 {
                return Err(Error::InvalidParameter {
                    what: "lr scale coeff",
                    value: coeff,
                });
            }
        }
        Ok(())
    }
}

/// Muon hyperparameters: PRISM minus the innovation block.
#[derive(Debug, Clone, PartialEq)]
pub struct MuonConfig {
    pub beta: f64,
    pub nesterov: bool,
    pub polar_mode: PolarMode,
    pub lr_scale_mode: LrScaleMode,
    pub weight_decay: f64,
}

impl Default for MuonConfig {
    fn default() -> Self {
        Self {
            beta: 0.95,
            nesterov: false,
            polar_mode: PolarMode::Iterative(NsCoefficients::quintic()),
            lr_scale_mode: LrScaleMode::None,
            weight_decay: 0.0,
        }
    }
}

/// Tikhonov-damped Muon: `M (MᵀM + λI)^{-1/2}`. Uniform damping baseline;
/// shares the momentum/polar settings with PRISM.
#[derive(Debug, Clone, PartialEq)]
pub struct TikhonovConfig {
    pub beta: f64,
    pub lambda: f64,
    pub nesterov: bool,
    pub polar_mode: PolarMode,
    pub lr_scale_mode: LrScaleMode,
    pub weight_decay: f64,
}

impl Default for TikhonovConfig {
    fn default() -> Self {
        Self {
            beta: 0.95,
            lambda: 1.0,
            nesterov: false,
            polar_mode: PolarMode::Iterative(NsCoefficients::quintic()),
            lr_scale_mode: LrScaleMode::None,
            weight_decay: 0.0,
        }
    }
}

/// Result of a momentum update: what feeds the polar step, and the
/// innovation `D = G - M` that augments it.
#[derive(Debug, Clone)]
pub struct MomentumUpdate {
    /// `M` (or `βM + (1-β)G` with nesterov on).
    pub effective: Matrix,
    /// `D = G - M`, computed against the updated momentum.
    pub innovation: Matrix,
}

/// EMA momentum update `M ← βM + (1-β)G` followed by the innovation
/// `D = G - M`; the state's step counter advances.
pub fn momentum_update(
    state: &mut SpectralState,
    grad: &Matrix,
    beta: f64,
    nesterov: bool,
) -> Result<MomentumUpdate> {
    if state.momentum().shape() != grad.shape() {
        return Err(Error::DimensionMismatch {
            op: "momentum_update",
            lhs: state.momentum().shape(),
            rhs: grad.shape(),
        });
    }
    let momentum = state
        .momentum()
        .scale(beta)?
        .add(&grad.scale(1.0 - beta)?)?;
    let innovation = grad.sub(&momentum)?;
    let effective = if nesterov {
        momentum.scale(beta)?.add(&grad.scale(1.0 - beta)?)?
    } else {
        momentum.clone()
    };
    state.replace_momentum(momentum);
    Ok(MomentumUpdate {
        effective,
        innovation,
    })
}

/// Innovation-augmented momentum block: `[M; γD]` (right) or `[M, γD]` (left).
pub fn build_augmented(m: &Matrix, d: &Matrix, gamma: f64, side: Side) -> Result<Matrix> {
    if m.shape() != d.shape() {
        return Err(Error::DimensionMismatch {
            op: "build_augmented",
            lhs: m.shape(),
            rhs: d.shape(),
        });
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidParameter {
            what: "gamma",
            value: gamma,
        });
    }
    let scaled = d.scale(gamma)?;
    match side {
        Side::Right => vstack(m, &scaled),
        Side::Left => hstack(m, &scaled),
    }
}

/// PRISM update direction: polar-decompose the augmented block per
/// `cfg.polar_mode` and slice the momentum's block back out.
///
/// An identically-zero momentum yields a zero direction (the polar factor
/// is undefined there; a zero step is the documented degenerate case).
pub fn prism_direction(m: &Matrix, d: &Matrix, cfg: &PrismConfig) -> Result<Matrix> {
    cfg.validate()?;
    if m.shape() != d.shape() {
        return Err(Error::DimensionMismatch {
            op: "prism_direction",
            lhs: m.shape(),
            rhs: d.shape(),
        });
    }
    if m.is_zero() {
        return Ok(Matrix::zeros(m.rows(), m.cols()));
    }
    let aug = build_augmented(m, d, cfg.gamma, cfg.side)?;
    match (&cfg.polar_mode, cfg.side) {
        (PolarMode::Exact, Side::Right) => {
            let precond = inv_sqrt_psd(&aug.gram_right(), 0.0)?;
            aug.matmul(&precond)?.top_rows(m.rows())
        }
        (PolarMode::Exact, Side::Left) => {
            let precond = inv_sqrt_psd(&aug.gram_left(), 0.0)?;
            precond.matmul(&aug)?.left_cols(m.cols())
        }
        (PolarMode::Iterative(coeffs), side) => {
            let polar = newton_schulz_polar(&aug, coeffs)?;
            match side {
                Side::Right => polar.top_rows(m.rows()),
                Side::Left => polar.left_cols(m.cols()),
            }
        }
    }
}

/// Muon update direction: the polar factor of the momentum itself.
///
/// The exact path runs `M · (MᵀM)^{-1/2}` through the same floored
/// eigendecomposition machinery as PRISM so that PRISM at γ = 0 is
/// bit-compatible with it, and rank-deficient momenta never hard-error
/// mid-run.
pub fn muon_direction(m: &Matrix, polar_mode: &PolarMode) -> Result<Matrix> {
    if m.is_zero() {
        return Ok(Matrix::zeros(m.rows(), m.cols()));
    }
    match polar_mode {
        PolarMode::Exact => {
            let precond = inv_sqrt_psd(&m.gram_right(), 0.0)?;
            m.matmul(&precond)
        }
        PolarMode::Iterative(coeffs) => newton_schulz_polar(m, coeffs),
    }
}

/// Tikhonov-damped direction `M (MᵀM + λI)^{-1/2}`.
///
/// The iterative path augments `M` with a `sqrt(λ) I` block — the Gram of
/// `[M; sqrt(λ) I]` is exactly `MᵀM + λI` — then slices, so the same
/// Newton–Schulz kernel serves both augmented schemes.
pub fn tikhonov_direction(m: &Matrix, lambda: f64, polar_mode: &PolarMode) -> Result<Matrix> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidParameter {
            what: "lambda",
            value: lambda,
        });
    }
    if m.is_zero() {
        return Ok(Matrix::zeros(m.rows(), m.cols()));
    }
    match polar_mode {
        PolarMode::Exact => {
            let mut gram = m.gram_right();
            gram = gram.add(&Matrix::diag(&vec![lambda; m.cols()])?)?;
            let precond = inv_sqrt_psd(&gram, 0.0)?;
            m.matmul(&precond)
        }
        PolarMode::Iterative(coeffs) => {
            let ridge = Matrix::diag(&vec![lambda.sqrt(); m.cols()])?;
            let aug = vstack(m, &ridge)?;
            newton_schulz_polar(&aug, coeffs)?.top_rows(m.rows())
        }
    }
}

/// Decoupled-decay parameter update:
/// `θ ← θ (1 - lr·weight_decay) - lr·lr_scale·direction`.
pub fn apply_update(
    param: &Matrix,
    direction: &Matrix,
    lr: f64,
    weight_decay: f64,
    lr_scale: f64,
) -> Result<Matrix> {
    if param.shape() != direction.shape() {
        return Err(Error::DimensionMismatch {
            op: "apply_update",
            lhs: param.shape(),
            rhs: direction.shape(),
        });
    }
    if !lr.is_finite() || lr < 0.0 {
        return Err(Error::InvalidParameter {
            what: "learning rate",
            value: lr,
        });
    }
    param
        .scale(1.0 - lr * weight_decay)?
        .sub(&direction.scale(lr * lr_scale)?)
}

/// Shape-dependent learning-rate multiplier.
pub fn lr_scale_for_shape(rows: usize, cols: usize, mode: &LrScaleMode) -> f64 {
    match mode {
        LrScaleMode::None => 1.0,
        LrScaleMode::DimScaled { coeff } => coeff * (rows.max(cols) as f64).sqrt(),
    }
}

/// Structured parameters (genuine matrices) get spectral updates;
/// vectors and scalars fall back to AdamW.
pub fn is_structured(rows: usize, cols: usize) -> bool {
    rows >= 2 && cols >= 2
}

/// A configured optimizer, dispatching per-parameter steps.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Prism(PrismConfig),
    Muon(MuonConfig),
    Tikhonov(TikhonovConfig),
    AdamW(AdamWConfig),
}

/// Per-parameter state matching the optimizer family.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Spectral(SpectralState),
    AdamW(AdamWState),
}

/// Outcome of one per-parameter step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub new_param: Matrix,
    /// Norm of the applied update term `lr·lr_scale·direction`
    /// (for AdamW, `lr · ‖m̂/(√v̂+ε)‖`); excludes the decay term.
    pub update_norm: f64,
    /// Momentum and innovation snapshots for spectral optimizers, for probing.
    pub momentum: Option<MomentumUpdate>,
}

impl Optimizer {
    pub fn validate(&self) -> Result<()> {
        match self {
            Optimizer::Prism(c) => c.validate(),
            Optimizer::Muon(c) => PrismConfig {
                beta: c.beta,
                gamma: 0.0,
                nesterov: c.nesterov,
                side: Side::Right,
                polar_mode: c.polar_mode.clone(),
                lr_scale_mode: c.lr_scale_mode,
                weight_decay: c.weight_decay,
            }
            .validate(),
            Optimizer::Tikhonov(c) => {
                if !c.lambda.is_finite() || c.lambda < 0.0 {
                    return Err(Error::InvalidParameter {
                        what: "lambda",
                        value: c.lambda,
                    });
                }
                PrismConfig {
                    beta: c.beta,
                    gamma: 0.0,
                    nesterov: c.nesterov,
                    side: Side::Right,
                    polar_mode: c.polar_mode.clone(),
                    lr_scale_mode: c.lr_scale_mode,
                    weight_decay: c.weight_decay,
                }
                .validate()
            }
            Optimizer::AdamW(c) => c.validate(),
        }
    }

    pub fn init_state(&self, rows: usize, cols: usize) -> OptimizerState {
        match self {
            Optimizer::AdamW(_) => OptimizerState::AdamW(AdamWState::new(rows, cols)),
            _ => OptimizerState::Spectral(SpectralState::new(rows, cols)),
        }
    }

    /// One optimization step for a single parameter.
    pub fn step(
        &self,
        param: &Matrix,
        grad: &Matrix,
        state: &mut OptimizerState,
        lr: f64,
    ) -> Result<StepOutput> {
        match (self, state) {
            (Optimizer::AdamW(cfg), OptimizerState::AdamW(st)) => {
                let new_param = adamw_step(param, grad, st, cfg, lr)?;
                // reconstruct the update term norm from the decayed baseline
                let decayed = param.scale(1.0 - lr * cfg.weight_decay)?;
                let update_norm = new_param.sub(&decayed)?.frobenius_norm();
                Ok(StepOutput {
                    new_param,
                    update_norm,
                    momentum: None,
                })
            }
            (Optimizer::Prism(cfg), OptimizerState::Spectral(st)) => {
                let mu = momentum_update(st, grad, cfg.beta, cfg.nesterov)?;
                let direction = prism_direction(&mu.effective, &mu.innovation, cfg)?;
                let scale = lr_scale_for_shape(param.rows(), param.cols(), &cfg.lr_scale_mode);
                let new_param = apply_update(param, &direction, lr, cfg.weight_decay, scale)?;
                Ok(StepOutput {
                    new_param,
                    update_norm: lr * scale * direction.frobenius_norm(),
                    momentum: Some(mu),
                })
            }
            (Optimizer::Muon(cfg), OptimizerState::Spectral(st)) => {
                let mu = momentum_update(st, grad, cfg.beta, cfg.nesterov)?;
                let direction = muon_direction(&mu.effective, &cfg.polar_mode)?;
                let scale = lr_scale_for_shape(param.rows(), param.cols(), &cfg.lr_scale_mode);
                let new_param = apply_update(param, &direction, lr, cfg.weight_decay, scale)?;
                Ok(StepOutput {
                    new_param,
                    update_norm: lr * scale * direction.frobenius_norm(),
                    momentum: Some(mu),
                })
            }
            (Optimizer::Tikhonov(cfg), OptimizerState::Spectral(st)) => {
                let mu = momentum_update(st, grad, cfg.beta, cfg.nesterov)?;
                let direction = tikhonov_direction(&mu.effective, cfg.lambda, &cfg.polar_mode)?;
                let scale = lr_scale_for_shape(param.rows(), param.cols(), &cfg.lr_scale_mode);
                let new_param = apply_update(param, &direction, lr, cfg.weight_decay, scale)?;
                Ok(StepOutput {
                    new_param,
                    update_norm: lr * scale * direction.frobenius_norm(),
                    momentum: Some(mu),
                })
            }
            _ => Err(Error::InvalidParameter {
                what: "optimizer/state family mismatch",
                value: 0.0,
            }),
        }
    }
}
