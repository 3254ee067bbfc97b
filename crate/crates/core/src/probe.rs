//! Spectral instrumentation: eigen-energy decomposition of the
//! innovation-augmented Gram matrix, per-direction SNR, and theoretical
//! vs. empirical spectral gain.
//!
//! Along each eigendirection `v_k` of `MᵀM + γ²DᵀD` the total energy
//! splits as `λ_k = ‖Mv_k‖² + γ²‖Dv_k‖²`, and the update responds with
//! gain `ρ_k = ‖Mv_k‖ / √λ_k = (1 + 1/SNR_k²)^{-1/2}` where
//! `SNR_k = ‖Mv_k‖ / (γ‖Dv_k‖)`. The empirical gain column measures the
//! update that actually ships, so in Newton–Schulz mode the gap between
//! the two columns quantifies the iteration's approximation error.
//!
//! The analysis is right-sided (an n-dimensional eigenbasis over columns);
//! probe left-sided runs by passing the transposed pair.

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eig, Matrix, REL_EIG_FLOOR};
use crate::optim::{prism_direction, PolarMode, PrismConfig, Side};

/// Per-eigendirection record.
#[derive(Debug, Clone)]
pub struct DirectionReport {
    pub index: usize,
    /// Eigenvalue of the augmented Gram: total energy along this direction.
    pub eigenvalue: f64,
    /// `‖M v_k‖²`.
    pub signal_energy: f64,
    /// `‖D v_k‖²` (unscaled by γ).
    pub noise_energy: f64,
    /// `‖Mv_k‖ / (γ‖Dv_k‖)`; `Some(inf)` when the noise term is zero,
    /// `None` (undefined) for degenerate directions below the eigenvalue floor.
    pub snr: Option<f64>,
    /// `ρ_k`, zero for degenerate directions.
    pub gain_theoretical: f64,
    /// `‖O v_k‖` measured from the actual update direction.
    pub gain_empirical: f64,
}

/// Spectral report for one `(M, D, γ)` snapshot; always `n` rows.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub gamma: f64,
    pub directions: Vec<DirectionReport>,
}

/// `MᵀM + γ² DᵀD`, assembled directly from the two Gram matrices.
/// Equals `gram_right(build_augmented(m, d, γ, Right))` up to rounding,
/// which pins the identity the augmented block relies on.
pub fn augmented_gram(m: &Matrix, d: &Matrix, gamma: f64) -> Result<Matrix> {
    if m.shape() != d.shape() {
        return Err(Error::DimensionMismatch {
            op: "augmented_gram",
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
    m.gram_right().add(&d.gram_right().scale(gamma * gamma)?)
}

/// Full spectral report: eigendecomposes the augmented Gram and measures
/// the update computed with the given polar mode (pass
/// [`PolarMode::Exact`] to verify theory; pass the run's iterative
/// schedule to measure what ships).
pub fn spectral_report(
    m: &Matrix,
    d: &Matrix,
    gamma: f64,
    polar_mode: &PolarMode,
) -> Result<SpectralReport> {
    let gram = augmented_gram(m, d, gamma)?;
    let eig = symmetric_eig(&gram)?;
    let lam_max = eig.values.first().copied().unwrap_or(0.0);
    if lam_max <= 0.0 {
        return Err(Error::ZeroMatrix {
            op: "spectral_report",
        });
    }
    let floor = REL_EIG_FLOOR * lam_max;

    let cfg = PrismConfig {
        gamma,
        side: Side::Right,
        polar_mode: polar_mode.clone(),
        ..PrismConfig::default()
    };
    let direction = prism_direction(m, d, &cfg)?;

    let n = gram.cols();
    let mut directions = Vec::with_capacity(n);
    for k in 0..n {
        let v = eig.vectors.column(k);
        let signal_norm = m.apply_norm(&v)?;
        let noise_norm = d.apply_norm(&v)?;
        let lam = eig.values[k].max(0.0);
        let gain_empirical = direction.apply_norm(&v)?;

        let (snr, gain_theoretical) = if lam <= floor {
            (None, 0.0)
        } else {
            let scaled_noise = gamma * noise_norm;
            let snr = if scaled_noise == 0.0 {
                f64::INFINITY
            } else {
                signal_norm / scaled_noise
            };
            (Some(snr), signal_norm / lam.sqrt())
        };

        directions.push(DirectionReport {
            index: k,
            eigenvalue: lam,
            signal_energy: signal_norm * signal_norm,
            noise_energy: noise_norm * noise_norm,
            snr,
            gain_theoretical,
            gain_empirical,
        });
    }
    Ok(SpectralReport { gamma, directions })
}

/// Low-SNR regime check: for directions with finite `0 < SNR <= 0.1`,
/// returns `(snr, ρ_k / snr)`. The ratio sits in [0.99, 1.0] because
/// `ρ = snr / sqrt(1 + snr²)` there.
pub fn low_snr_asymptote_check(report: &SpectralReport) -> Vec<(f64, f64)> {
    report
        .directions
        .iter()
        .filter_map(|d| match d.snr {
            Some(snr) if snr > 0.0 && snr <= 0.1 => Some((snr, d.gain_theoretical / snr)),
            _ => None,
        })
        .collect()
}

/// Aggregate trajectory statistics for one instant of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    /// `sqrt(Σ ‖θ_i‖_F²)` over all parameters.
    pub param_norm: f64,
    /// `sqrt(Σ ‖U_i‖_F²)` over the updates applied this step.
    pub update_norm: f64,
    /// Running mean of all empirical gains observed so far, if any.
    pub mean_empirical_gain: Option<f64>,
}

/// Accumulates empirical gains across probes and snapshots trajectory
/// statistics on demand.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryTracker {
    gain_sum: f64,
    gain_count: u64,
}

impl TrajectoryTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_gains(&mut self, report: &SpectralReport) {
        for d in &report.directions {
            self.gain_sum += d.gain_empirical;
            self.gain_count += 1;
        }
    }

    pub fn stats(&self, params: &[Matrix], updates: &[Matrix]) -> TrajectoryStats {
        TrajectoryStats {
            param_norm: crate::optim::global_norm(params),
            update_norm: crate::optim::global_norm(updates),
            mean_empirical_gain: (self.gain_count > 0)
                .then(|| self.gain_sum / self.gain_count as f64),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::NsCoefficients;
    use crate::optim::build_augmented;
    use crate::problems::{synth, Rng};

    #[test]
    fn augmented_gram_trivial_cases() {
        let m = Matrix::from_rows(&[&[1.0, 0.0]]).unwrap();
        let d = Matrix::from_rows(&[&[0.0, 1.0]]).unwrap();
        let g0 = augmented_gram(&m, &d, 0.0).unwrap();
        assert!(g0.sub(&m.gram_right()).unwrap().max_abs() < 1e-15);

        let g3 = augmented_gram(&m, &d, 3.0).unwrap();
        assert!(g3.sub(&Matrix::diag(&[1.0, 9.0]).unwrap()).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn augmented_gram_agrees_with_stacked_block() {
        let mut rng = Rng::new(21, 0);
        for gamma in [0.0, 0.7, 2.5] {
            let m = synth::random_matrix(&mut rng, 7, 4);
            let d = synth::random_matrix(&mut rng, 7, 4);
            let direct = augmented_gram(&m, &d, gamma).unwrap();
            let stacked = build_augmented(&m, &d, gamma, crate::optim::Side::Right)
                .unwrap()
                .gram_right();
            assert!(direct.sub(&stacked).unwrap().max_abs() < 1e-10);
        }
    }

    #[test]
    fn signal_only_direction_gets_unit_gain() {
        let mut rng = Rng::new(22, 0);
        let m = synth::random_conditioned(&mut rng, 6, 3, 3.0).unwrap();
        let d = Matrix::zeros(6, 3);
        let report = spectral_report(&m, &d, 1.0, &PolarMode::Exact).unwrap();
        for dir in &report.directions {
            assert_eq!(dir.snr, Some(f64::INFINITY));
            assert!((dir.gain_theoretical - 1.0).abs() < 1e-9);
            assert!((dir.gain_empirical - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn three_four_five_gain() {
        // ‖Mv‖ = 3 and γ‖Dv‖ = 4 along the sole direction → ρ = 3/5
        let m = Matrix::from_rows(&[&[3.0]]).unwrap();
        let d = Matrix::from_rows(&[&[4.0]]).unwrap();
        let report = spectral_report(&m, &d, 1.0, &PolarMode::Exact).unwrap();
        let dir = &report.directions[0];
        assert!((dir.gain_theoretical - 0.6).abs() < 1e-12);
        assert!((dir.snr.unwrap() - 0.75).abs() < 1e-12);
        assert!((dir.gain_empirical - 0.6).abs() < 1e-9);
    }

    #[test]
    fn unit_snr_gives_inverse_sqrt_two_gain() {
        // SNR = 1 → ρ = 1/sqrt(2)
        let m = Matrix::from_rows(&[&[1.0]]).unwrap();
        let d = Matrix::from_rows(&[&[0.5]]).unwrap();
        let report = spectral_report(&m, &d, 2.0, &PolarMode::Exact).unwrap();
        let dir = &report.directions[0];
        assert!((dir.snr.unwrap() - 1.0).abs() < 1e-12);
        assert!((dir.gain_theoretical - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn energy_decomposition_and_trace_identity() {
        let mut rng = Rng::new(23, 0);
        for gamma in [0.5, 1.0, 2.0, 5.0] {
            let m = synth::random_matrix(&mut rng, 9, 6);
            let d = synth::random_matrix(&mut rng, 9, 6);
            let report = spectral_report(&m, &d, gamma, &PolarMode::Exact).unwrap();

            let mut lam_sum = 0.0;
            for dir in &report.directions {
                let split = dir.signal_energy + gamma * gamma * dir.noise_energy;
                let rel = (dir.eigenvalue - split).abs() / dir.eigenvalue.max(1e-300);
                assert!(rel < 1e-8, "energy split off by {rel}");
                lam_sum += dir.eigenvalue;
            }
            let total = m.frobenius_norm().powi(2) + gamma * gamma * d.frobenius_norm().powi(2);
            assert!((lam_sum - total).abs() / total < 1e-8);
        }
    }

    #[test]
    fn theory_matches_empirics_in_exact_mode() {
        let mut rng = Rng::new(24, 0);
        for gamma in [0.5, 1.0, 2.0, 5.0] {
            let m = synth::random_matrix(&mut rng, 12, 8);
            let d = synth::random_matrix(&mut rng, 12, 8);
            let report = spectral_report(&m, &d, gamma, &PolarMode::Exact).unwrap();
            for dir in &report.directions {
                assert!(
                    (dir.gain_empirical - dir.gain_theoretical).abs() < 1e-6,
                    "gamma {gamma} k {}: {} vs {}",
                    dir.index,
                    dir.gain_empirical,
                    dir.gain_theoretical
                );
            }
        }
    }

    #[test]
    fn ns_mode_stays_within_loose_tolerance() {
        let mut rng = Rng::new(25, 0);
        let mode = PolarMode::Iterative(NsCoefficients::quintic());
        for gamma in [0.5, 2.0] {
            let m = synth::random_matrix(&mut rng, 12, 8);
            let d = synth::random_matrix(&mut rng, 12, 8);
            let report = spectral_report(&m, &d, gamma, &mode).unwrap();
            for dir in &report.directions {
                assert!(
                    (dir.gain_empirical - dir.gain_theoretical).abs() <= 0.15,
                    "gamma {gamma} k {}: empirical {} vs theory {}",
                    dir.index,
                    dir.gain_empirical,
                    dir.gain_theoretical
                );
            }
        }
    }

    #[test]
    fn snr_and_energy_forms_of_the_gain_agree() {
        let mut rng = Rng::new(26, 0);
        let m = synth::random_matrix(&mut rng, 10, 5);
        let d = synth::random_matrix(&mut rng, 10, 5);
        let report = spectral_report(&m, &d, 1.3, &PolarMode::Exact).unwrap();
        for dir in &report.directions {
            let snr = dir.snr.unwrap();
            let from_snr = 1.0 / (1.0 + 1.0 / (snr * snr)).sqrt();
            assert!((dir.gain_theoretical - from_snr).abs() < 1e-10);
            assert!(dir.gain_theoretical >= 0.0 && dir.gain_theoretical <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn gain_formula_monotonic_in_snr_and_gamma() {
        // fixed energies: ρ = s / sqrt(s² + γ² n²)
        let rho = |s: f64, n: f64, g: f64| s / (s * s + g * g * n * n).sqrt();
        let mut prev = 0.0;
        for snr_scale in [0.1, 0.5, 1.0, 2.0, 10.0] {
            let r = rho(snr_scale, 1.0, 1.0);
            assert!(r > prev);
            prev = r;
        }
        let mut prev = 1.0;
        for gamma in [0.5, 1.0, 2.0, 5.0] {
            let r = rho(1.0, 1.0, gamma);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn muon_reference_all_gains_one() {
        let mut rng = Rng::new(27, 0);
        let m = synth::random_matrix(&mut rng, 8, 6);
        let d = synth::random_matrix(&mut rng, 8, 6);
        let report = spectral_report(&m, &d, 0.0, &PolarMode::Exact).unwrap();
        for dir in &report.directions {
            assert!((dir.gain_empirical - 1.0).abs() < 1e-9);
            assert!((dir.gain_theoretical - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_directions_keep_report_length() {
        // rank-1 M, zero D: n-1 directions are degenerate but still reported
        let m = Matrix::from_rows(&[&[1.0, 2.0, 3.0]]).unwrap();
        let d = Matrix::zeros(1, 3);
        let report = spectral_report(&m, &d, 1.0, &PolarMode::Exact).unwrap();
        assert_eq!(report.directions.len(), 3);
        let degenerate = report.directions.iter().filter(|d| d.snr.is_none()).count();
        assert_eq!(degenerate, 2);
        for dir in &report.directions {
            if dir.snr.is_none() {
                assert_eq!(dir.gain_theoretical, 0.0);
            }
        }
    }

    #[test]
    fn all_zero_inputs_error() {
        let z = Matrix::zeros(2, 2);
        assert!(matches!(
            spectral_report(&z, &z, 1.0, &PolarMode::Exact),
            Err(Error::ZeroMatrix { .. })
        ));
    }

    #[test]
    fn low_snr_ratio_closed_forms() {
        // snr = 0.1 → ratio 0.99504, snr = 0.01 → 0.99995
        let m = Matrix::diag(&[0.1, 0.01, 10.0]).unwrap();
        let d = Matrix::identity(3);
        let report = spectral_report(&m, &d, 1.0, &PolarMode::Exact).unwrap();
        let checked = low_snr_asymptote_check(&report);
        // the snr = 10 direction is out of regime
        assert_eq!(checked.len(), 2);
        for (snr, ratio) in checked {
            let want = 1.0 / (1.0 + snr * snr).sqrt();
            assert!((ratio - want).abs() < 1e-9);
            assert!((0.99..=1.0).contains(&ratio), "snr {snr}: ratio {ratio}");
        }
    }

    #[test]
    fn tracker_accumulates_running_mean() {
        let m = Matrix::from_rows(&[&[3.0]]).unwrap();
        let d = Matrix::from_rows(&[&[4.0]]).unwrap();
        let report = spectral_report(&m, &d, 1.0, &PolarMode::Exact).unwrap();

        let mut tracker = TrajectoryTracker::new();
        let stats = tracker.stats(&[Matrix::identity(2)], &[]);
        assert!((stats.param_norm - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(stats.update_norm, 0.0);
        assert_eq!(stats.mean_empirical_gain, None);

        tracker.record_gains(&report);
        tracker.record_gains(&report);
        let stats = tracker.stats(&[], &[Matrix::zeros(2, 2)]);
        assert!((stats.mean_empirical_gain.unwrap() - 0.6).abs() < 1e-9);
    }
}
