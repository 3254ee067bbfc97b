//! Declarative experiment configuration (TOML).
//!
//! One self-describing file fully determines a run; there is no
//! environment-variable configuration. Example:
//!
//! ```toml
//! [problem]
//! kind = "noisy-quadratic"
//! rows = 16
//! curvature = [1.0, 1.0, 1.0, 1.0]
//! noise_scales = [0.0, 0.0, 5.0, 5.0]
//! seed = 42
//!
//! [optimizer]
//! kind = "prism"
//! gamma = 2.0
//! polar = "exact"
//!
//! [schedule]
//! warmup_steps = 100
//! lr_max = 0.02
//! lr_final = 0.002
//!
//! [run]
//! steps = 2000
//! probe_every = 200
//! out_dir = "out"
//!
//! [grid]
//! gamma = [0.0, 0.5, 1.0, 2.0]
//! ```

use crate::{HarnessError, Result};
use prism_core::linalg::NsCoefficients;
use prism_core::optim::{
    AdamWConfig, LrScaleMode, MuonConfig, Optimizer, PolarMode, PrismConfig, Side,
    TikhonovConfig,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub optimizer: OptimizerConfig,
    pub schedule: ScheduleConfig,
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Anisotropic stochastic quadratic with per-column curvature and noise.
    NoisyQuadratic {
        rows: usize,
        curvature: Vec<f64>,
        noise_scales: Vec<f64>,
        seed: u64,
        /// Global multiplier on the Gaussian init.
        #[serde(default = "default_init_scale")]
        init_scale: f64,
        /// Optional per-column multipliers on top of `init_scale`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        init_column_scales: Option<Vec<f64>>,
    },
    /// Two-layer tanh MLP on synthetic regression data; weight matrices
    /// take the configured spectral optimizer, biases fall back to AdamW.
    MlpRegression {
        d_in: usize,
        d_hidden: usize,
        d_out: usize,
        n_samples: usize,
        batch_size: usize,
        teacher_noise: f64,
        seed: u64,
    },
}

fn default_init_scale() -> f64 {
    1.0
}

impl ProblemConfig {
    pub fn seed(&self) -> u64 {
        match self {
            ProblemConfig::NoisyQuadratic { seed, .. } => *seed,
            ProblemConfig::MlpRegression { seed, .. } => *seed,
        }
    }

    pub fn set_seed(&mut self, new_seed: u64) {
        match self {
            ProblemConfig::NoisyQuadratic { seed, .. } => *seed = new_seed,
            ProblemConfig::MlpRegression { seed, .. } => *seed = new_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SideConfig {
    #[default]
    Right,
    Left,
}

impl From<SideConfig> for Side {
    fn from(s: SideConfig) -> Side {
        match s {
            SideConfig::Right => Side::Right,
            SideConfig::Left => Side::Left,
        }
    }
}

/// Polar computation mode. `exact` is the eigendecomposition route; the
/// others are Newton–Schulz schedules (`quintic` is the convergent
/// default, `muon-quintic` the aggressive five-step schedule, `cubic`
/// the 30-step high-precision one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PolarConfig {
    Exact,
    #[default]
    Quintic,
    MuonQuintic,
    Cubic,
}

impl PolarConfig {
    pub fn to_mode(self, ns_iterations: Option<usize>) -> Result<PolarMode> {
        let base = match self {
            PolarConfig::Exact => {
                if ns_iterations.is_some() {
                    return Err(HarnessError::Config(
                        "ns_iterations has no effect with polar = \"exact\"".into(),
                    ));
                }
                return Ok(PolarMode::Exact);
            }
            PolarConfig::Quintic => NsCoefficients::quintic(),
            PolarConfig::MuonQuintic => NsCoefficients::muon_quintic(),
            PolarConfig::Cubic => NsCoefficients::cubic(30).map_err(HarnessError::Core)?,
        };
        let coeffs = match ns_iterations {
            Some(n) => base.with_iterations(n).map_err(HarnessError::Core)?,
            None => base,
        };
        Ok(PolarMode::Iterative(coeffs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LrScaleConfig {
    #[default]
    None,
    DimScaled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OptimizerConfig {
    Prism {
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        nesterov: bool,
        #[serde(default)]
        side: SideConfig,
        #[serde(default)]
        polar: PolarConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ns_iterations: Option<usize>,
        #[serde(default)]
        lr_scale: LrScaleConfig,
        #[serde(default = "default_lr_scale_coeff")]
        lr_scale_coeff: f64,
        #[serde(default = "default_weight_decay")]
        weight_decay: f64,
    },
    Muon {
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        nesterov: bool,
        #[serde(default)]
        polar: PolarConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ns_iterations: Option<usize>,
        #[serde(default)]
        lr_scale: LrScaleConfig,
        #[serde(default = "default_lr_scale_coeff")]
        lr_scale_coeff: f64,
        #[serde(default = "default_weight_decay")]
        weight_decay: f64,
    },
    Tikhonov {
        lambda: f64,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        nesterov: bool,
        #[serde(default)]
        polar: PolarConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ns_iterations: Option<usize>,
        #[serde(default)]
        lr_scale: LrScaleConfig,
        #[serde(default = "default_lr_scale_coeff")]
        lr_scale_coeff: f64,
        #[serde(default = "default_weight_decay")]
        weight_decay: f64,
    },
    #[serde(rename = "adamw")]
    AdamW {
        #[serde(default = "default_adamw_beta1")]
        beta1: f64,
        #[serde(default = "default_adamw_beta2")]
        beta2: f64,
        #[serde(default = "default_adamw_eps")]
        eps: f64,
        #[serde(default = "default_weight_decay")]
        weight_decay: f64,
    },
}

fn default_beta() -> f64 {
    0.95
}
fn default_gamma() -> f64 {
    1.0
}
fn default_lr_scale_coeff() -> f64 {
    0.2
}
fn default_weight_decay() -> f64 {
    0.01
}
fn default_adamw_beta1() -> f64 {
    0.9
}
fn default_adamw_beta2() -> f64 {
    0.95
}
fn default_adamw_eps() -> f64 {
    1e-8
}

impl OptimizerConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            OptimizerConfig::Prism { .. } => "prism",
            OptimizerConfig::Muon { .. } => "muon",
            OptimizerConfig::Tikhonov { .. } => "tikhonov",
            OptimizerConfig::AdamW { .. } => "adamw",
        }
    }

    pub fn is_spectral(&self) -> bool {
        !matches!(self, OptimizerConfig::AdamW { .. })
    }

    /// γ carried by the config (prism only).
    pub fn gamma(&self) -> Option<f64> {
        match self {
            OptimizerConfig::Prism { gamma, .. } => Some(*gamma),
            _ => None,
        }
    }

    pub fn set_gamma(&mut self, new_gamma: f64) -> Result<()> {
        match self {
            OptimizerConfig::Prism { gamma, .. } => {
                *gamma = new_gamma;
                Ok(())
            }
            _ => Err(HarnessError::Config(
                "a gamma grid requires the prism optimizer".into(),
            )),
        }
    }

    pub fn force_exact_polar(&mut self) {
        match self {
            OptimizerConfig::Prism { polar, ns_iterations, .. }
            | OptimizerConfig::Muon { polar, ns_iterations, .. }
            | OptimizerConfig::Tikhonov { polar, ns_iterations, .. } => {
                *polar = PolarConfig::Exact;
                *ns_iterations = None;
            }
            OptimizerConfig::AdamW { .. } => {}
        }
    }

    pub fn weight_decay(&self) -> f64 {
        match self {
            OptimizerConfig::Prism { weight_decay, .. }
            | OptimizerConfig::Muon { weight_decay, .. }
            | OptimizerConfig::Tikhonov { weight_decay, .. }
            | OptimizerConfig::AdamW { weight_decay, .. } => *weight_decay,
        }
    }

    fn lr_scale_mode(lr_scale: LrScaleConfig, coeff: f64) -> LrScaleMode {
        match lr_scale {
            LrScaleConfig::None => LrScaleMode::None,
            LrScaleConfig::DimScaled => LrScaleMode::DimScaled { coeff },
        }
    }

    /// Materializes the core optimizer.
    pub fn build(&self) -> Result<Optimizer> {
        let opt = match self {
            OptimizerConfig::Prism {
                beta,
                gamma,
                nesterov,
                side,
                polar,
                ns_iterations,
                lr_scale,
                lr_scale_coeff,
                weight_decay,
            } => Optimizer::Prism(PrismConfig {
                beta: *beta,
                gamma: *gamma,
                nesterov: *nesterov,
                side: (*side).into(),
                polar_mode: polar.to_mode(*ns_iterations)?,
                lr_scale_mode: Self::lr_scale_mode(*lr_scale, *lr_scale_coeff),
                weight_decay: *weight_decay,
            }),
            OptimizerConfig::Muon {
                beta,
                nesterov,
                polar,
                ns_iterations,
                lr_scale,
                lr_scale_coeff,
                weight_decay,
            } => Optimizer::Muon(MuonConfig {
                beta: *beta,
                nesterov: *nesterov,
                polar_mode: polar.to_mode(*ns_iterations)?,
                lr_scale_mode: Self::lr_scale_mode(*lr_scale, *lr_scale_coeff),
                weight_decay: *weight_decay,
            }),
            OptimizerConfig::Tikhonov {
                lambda,
                beta,
                nesterov,
                polar,
                ns_iterations,
                lr_scale,
                lr_scale_coeff,
                weight_decay,
            } => Optimizer::Tikhonov(TikhonovConfig {
                beta: *beta,
                lambda: *lambda,
                nesterov: *nesterov,
                polar_mode: polar.to_mode(*ns_iterations)?,
                lr_scale_mode: Self::lr_scale_mode(*lr_scale, *lr_scale_coeff),
                weight_decay: *weight_decay,
            }),
            OptimizerConfig::AdamW {
                beta1,
                beta2,
                eps,
                weight_decay,
            } => Optimizer::AdamW(AdamWConfig {
                beta1: *beta1,
                beta2: *beta2,
                eps: *eps,
                weight_decay: *weight_decay,
            }),
        };
        opt.validate().map_err(HarnessError::Core)?;
        Ok(opt)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default)]
    pub warmup_steps: u64,
    pub lr_max: f64,
    /// Defaults to `lr_max / 10`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr_final: Option<f64>,
}

impl ScheduleConfig {
    pub fn lr_final(&self) -> f64 {
        self.lr_final.unwrap_or(self.lr_max * 0.1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub steps: u64,
    #[serde(default = "default_clip_threshold")]
    pub clip_threshold: f64,
    /// Emit a spectral report every this many steps; 0 disables probing.
    #[serde(default)]
    pub probe_every: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

fn default_clip_threshold() -> f64 {
    10.0
}

fn default_out_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr_max: Option<Vec<f64>>,
}

impl GridConfig {
    pub fn is_empty(&self) -> bool {
        self.gamma.as_ref().is_none_or(Vec::is_empty)
            && self.lr_max.as_ref().is_none_or(Vec::is_empty)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.steps == 0 {
            return Err(HarnessError::Config("run.steps must be >= 1".into()));
        }
        if !self.run.clip_threshold.is_finite() || self.run.clip_threshold <= 0.0 {
            return Err(HarnessError::Config(
                "run.clip_threshold must be positive".into(),
            ));
        }
        if self.schedule.warmup_steps > self.run.steps {
            return Err(HarnessError::Config(
                "schedule.warmup_steps must not exceed run.steps".into(),
            ));
        }
        for (name, v) in [
            ("schedule.lr_max", self.schedule.lr_max),
            ("schedule.lr_final", self.schedule.lr_final()),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(HarnessError::Config(format!("{name} must be >= 0")));
            }
        }

        match &self.problem {
            ProblemConfig::NoisyQuadratic {
                rows,
                curvature,
                noise_scales,
                init_scale,
                init_column_scales,
                ..
            } => {
                if *rows == 0 {
                    return Err(HarnessError::Config("problem.rows must be >= 1".into()));
                }
                if curvature.is_empty() || curvature.len() != noise_scales.len() {
                    return Err(HarnessError::Config(
                        "problem.curvature and problem.noise_scales must be nonempty and equal length".into(),
                    ));
                }
                if !init_scale.is_finite() || *init_scale < 0.0 {
                    return Err(HarnessError::Config(
                        "problem.init_scale must be >= 0".into(),
                    ));
                }
                if let Some(scales) = init_column_scales {
                    if scales.len() != curvature.len() {
                        return Err(HarnessError::Config(
                            "problem.init_column_scales must match the column count".into(),
                        ));
                    }
                }
                // constructibility check (positivity etc.)
                prism_core::problems::NoisyQuadratic::new(
                    curvature.clone(),
                    noise_scales.clone(),
                    0,
                )
                .map_err(HarnessError::Core)?;
            }
            ProblemConfig::MlpRegression {
                d_in,
                d_hidden,
                d_out,
                n_samples,
                batch_size,
                teacher_noise,
                ..
            } => {
                for (name, v) in [
                    ("d_in", d_in),
                    ("d_hidden", d_hidden),
                    ("d_out", d_out),
                    ("n_samples", n_samples),
                    ("batch_size", batch_size),
                ] {
                    if *v == 0 {
                        return Err(HarnessError::Config(format!("problem.{name} must be >= 1")));
                    }
                }
                if batch_size > n_samples {
                    return Err(HarnessError::Config(
                        "problem.batch_size must not exceed n_samples".into(),
                    ));
                }
                if !teacher_noise.is_finite() || *teacher_noise < 0.0 {
                    return Err(HarnessError::Config(
                        "problem.teacher_noise must be >= 0".into(),
                    ));
                }
            }
        }

        // optimizer must materialize cleanly (for every grid gamma too)
        self.optimizer.build()?;
        if let Some(grid) = &self.grid {
            if let Some(gammas) = &grid.gamma {
                if !matches!(self.optimizer, OptimizerConfig::Prism { .. }) {
                    return Err(HarnessError::Config(
                        "a gamma grid requires the prism optimizer".into(),
                    ));
                }
                for &g in gammas {
                    let mut probe = self.optimizer.clone();
                    probe.set_gamma(g)?;
                    probe.build()?;
                }
            }
            if let Some(lrs) = &grid.lr_max {
                for &lr in lrs {
                    if !lr.is_finite() || lr < 0.0 {
                        return Err(HarnessError::Config(format!(
                            "grid.lr_max entry {lr} must be >= 0"
                        )));
                    }
                }
            }
        }

        if self.run.probe_every > 0 && !self.optimizer.is_spectral() {
            return Err(HarnessError::Config(
                "probing requires a spectral optimizer (prism, muon, or tikhonov)".into(),
            ));
        }
        if self.run.probe_every > 0 && matches!(self.optimizer, OptimizerConfig::Tikhonov { .. }) {
            return Err(HarnessError::Config(
                "spectral probes are defined for prism and muon runs only".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [problem]
        kind = "noisy-quadratic"
        rows = 4
        curvature = [1.0, 2.0]
        noise_scales = [0.0, 1.0]
        seed = 1

        [optimizer]
        kind = "prism"

        [schedule]
        lr_max = 0.02

        [run]
        steps = 10
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.optimizer.kind_name(), "prism");
        assert_eq!(cfg.optimizer.gamma(), Some(1.0));
        assert_eq!(cfg.run.clip_threshold, 10.0);
        assert_eq!(cfg.run.out_dir, "out");
        assert!((cfg.schedule.lr_final() - 0.002).abs() < 1e-15);
        assert!(cfg.grid.is_none());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = MINIMAL.replace("steps = 10", "steps = 10\nbogus = 1");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad),
            Err(HarnessError::Toml(_))
        ));
    }

    #[test]
    fn zero_steps_is_forbidden() {
        let bad = MINIMAL.replace("steps = 10", "steps = 0");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad),
            Err(HarnessError::Config(_))
        ));
    }

    #[test]
    fn gamma_grid_requires_prism() {
        let bad = MINIMAL.replace("kind = \"prism\"", "kind = \"muon\"")
            + "\n[grid]\ngamma = [0.0, 1.0]\n";
        assert!(matches!(
            ExperimentConfig::from_toml(&bad),
            Err(HarnessError::Config(_))
        ));
    }

    #[test]
    fn probe_on_tikhonov_is_rejected() {
        let bad = MINIMAL
            .replace("kind = \"prism\"", "kind = \"tikhonov\"\nlambda = 1.0")
            .replace("steps = 10", "steps = 10\nprobe_every = 5");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad),
            Err(HarnessError::Config(_))
        ));
    }

    #[test]
    fn optimizer_configs_build() {
        for kind in [
            "kind = \"muon\"",
            "kind = \"tikhonov\"\nlambda = 0.5",
            "kind = \"adamw\"",
            "kind = \"prism\"\npolar = \"muon-quintic\"",
            "kind = \"prism\"\npolar = \"cubic\"\nns_iterations = 40",
            "kind = \"prism\"\npolar = \"exact\"\nside = \"left\"",
        ] {
            let text = MINIMAL.replace("kind = \"prism\"", kind);
            let cfg = ExperimentConfig::from_toml(&text)
                .unwrap_or_else(|e| panic!("{kind}: {e}"));
            cfg.optimizer.build().unwrap();
        }
    }

    #[test]
    fn bad_quadratic_curvature_is_rejected() {
        let bad = MINIMAL.replace("curvature = [1.0, 2.0]", "curvature = [1.0, -2.0]");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }
}
