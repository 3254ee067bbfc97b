//! Experiment execution: grid expansion, the per-step loop
//! (gradient → clip → optimizer step → metrics), the divergence latch,
//! and spectral probing.

use crate::config::{ExperimentConfig, OptimizerConfig, ProblemConfig};
use crate::report::{
    self, assign_ranks, MetricsRecord, RunSummary,
};
use crate::{HarnessError, Result};
use prism_core::linalg::Matrix;
use prism_core::optim::{
    clip_gradients, cosine_schedule, global_norm, AdamWConfig, Optimizer, OptimizerState,
    Schedule,
};
use prism_core::probe::{spectral_report, TrajectoryTracker};
use prism_core::problems::{make_regression_data, synth, NoisyQuadratic, Rng, ToyMlp};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// A run is latched as diverged once the loss goes non-finite or the
/// total parameter norm exceeds this bound; no further optimizer steps
/// execute for that run.
pub const DIVERGENCE_NORM: f64 = 1e9;

// rng stream ids, fixed so runs are reproducible across grid cells
const STREAM_INIT: u64 = 1;
const STREAM_DATA: u64 = 2;
const STREAM_GRAD: u64 = 3;

/// CLI-level overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub exact_polar: bool,
}

pub fn apply_overrides(cfg: &mut ExperimentConfig, overrides: &Overrides) {
    if let Some(dir) = &overrides.out_dir {
        cfg.run.out_dir = dir.display().to_string();
    }
    if let Some(seed) = overrides.seed {
        cfg.problem.set_seed(seed);
    }
    if overrides.exact_polar {
        cfg.optimizer.force_exact_polar();
    }
}

/// One fully resolved grid cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub run_id: String,
    pub config: ExperimentConfig,
}

/// Expands the optional grid into the Cartesian product of its axes,
/// gamma outer, lr inner; without a grid the config itself is the one cell.
pub fn expand_grid(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    let grid = match &cfg.grid {
        None => {
            let mut config = cfg.clone();
            config.grid = None;
            return Ok(vec![Cell {
                run_id: "run".into(),
                config,
            }]);
        }
        Some(g) => g,
    };
    if grid.is_empty() {
        return Err(HarnessError::Config(
            "grid section is present but has no axes".into(),
        ));
    }
    let gammas: Vec<Option<f64>> = match &grid.gamma {
        Some(list) => list.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let lrs: Vec<Option<f64>> = match &grid.lr_max {
        Some(list) => list.iter().copied().map(Some).collect(),
        None => vec![None],
    };

    let mut cells = Vec::with_capacity(gammas.len() * lrs.len());
    for gamma in &gammas {
        for lr in &lrs {
            let mut config = cfg.clone();
            config.grid = None;
            let mut run_id = format!("cell{:03}", cells.len());
            if let Some(g) = gamma {
                config.optimizer.set_gamma(*g)?;
                run_id.push_str(&format!("-gamma{g}"));
            }
            if let Some(lr) = lr {
                // gridding lr_max rescales the whole schedule: an explicit
                // lr_final keeps its ratio to lr_max (an absent one already
                // defaults to lr_max/10 per cell)
                if let Some(final_lr) = cfg.schedule.lr_final {
                    if cfg.schedule.lr_max > 0.0 {
                        config.schedule.lr_final =
                            Some(final_lr * lr / cfg.schedule.lr_max);
                    }
                }
                config.schedule.lr_max = *lr;
                run_id.push_str(&format!("-lr{lr}"));
            }
            config.validate()?;
            cells.push(Cell { run_id, config });
        }
    }
    Ok(cells)
}

/// Everything a finished experiment produces, in memory.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub summaries: Vec<RunSummary>,
    pub metrics_csv: String,
    /// Present when probing was enabled.
    pub spectral_csv: Option<String>,
}

/// Runs every grid cell (in parallel when a rayon pool provides threads),
/// merges outputs in deterministic grid order, and ranks the summaries by
/// final loss (ties broken by lower γ, then lower lr; diverged runs last).
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let cells = expand_grid(cfg)?;
    let results: std::result::Result<Vec<CellOutput>, HarnessError> =
        cells.par_iter().map(run_cell).collect();
    let results = results?;

    let mut metrics_rows = Vec::new();
    let mut spectral_body = String::new();
    let mut summaries = Vec::with_capacity(results.len());
    for cell in results {
        metrics_rows.extend(cell.metrics);
        spectral_body.push_str(&cell.spectral_body);
        summaries.push(cell.summary);
    }
    assign_ranks(&mut summaries);

    Ok(ExperimentOutput {
        summaries,
        metrics_csv: report::metrics_csv(&metrics_rows),
        spectral_csv: (cfg.run.probe_every > 0).then(|| report::spectral_csv(&spectral_body)),
    })
}

/// `execute` for the sweep subcommand: requires a nonempty grid.
pub fn execute_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match &cfg.grid {
        Some(grid) if !grid.is_empty() => execute(cfg),
        _ => Err(HarnessError::Config(
            "sweep requires a nonempty [grid] section".into(),
        )),
    }
}

/// Writes metrics.csv, summary.json, and (when probing) spectral.csv.
pub fn write_outputs(out_dir: &Path, output: &ExperimentOutput) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let metrics = out_dir.join("metrics.csv");
    std::fs::write(&metrics, &output.metrics_csv)?;
    written.push(metrics);

    let summary = out_dir.join("summary.json");
    std::fs::write(&summary, report::summary_json(&output.summaries))?;
    written.push(summary);

    if let Some(spectral) = &output.spectral_csv {
        let path = out_dir.join("spectral.csv");
        std::fs::write(&path, spectral)?;
        written.push(path);
    }
    Ok(written)
}

struct CellOutput {
    summary: RunSummary,
    metrics: Vec<MetricsRecord>,
    spectral_body: String,
}

/// Per-step loss and per-slot gradients.
type StepGrads = std::result::Result<(f64, Vec<Matrix>), prism_core::Error>;

/// A parameter with its optimizer and state.
struct Slot {
    name: &'static str,
    value: Matrix,
    optimizer: Optimizer,
    state: OptimizerState,
    probeable: bool,
}

impl Slot {
    fn new(name: &'static str, value: Matrix, optimizer: Optimizer, probeable: bool) -> Self {
        let state = optimizer.init_state(value.rows(), value.cols());
        Self {
            name,
            value,
            optimizer,
            state,
            probeable,
        }
    }
}

fn probe_gamma(opt: &OptimizerConfig) -> f64 {
    opt.gamma().unwrap_or(0.0)
}

fn run_cell(cell: &Cell) -> std::result::Result<CellOutput, HarnessError> {
    let cfg = &cell.config;
    let seed = cfg.problem.seed();
    let optimizer = cfg.optimizer.build()?;

    match &cfg.problem {
        ProblemConfig::NoisyQuadratic {
            rows,
            curvature,
            noise_scales,
            init_scale,
            init_column_scales,
            ..
        } => {
            let problem = NoisyQuadratic::new(curvature.clone(), noise_scales.clone(), seed)?;
            let cols = curvature.len();
            let mut init_rng = Rng::new(seed, STREAM_INIT);
            let gaussian = synth::random_matrix(&mut init_rng, *rows, cols);
            let mut data = Vec::with_capacity(rows * cols);
            for i in 0..*rows {
                for j in 0..cols {
                    let col_scale = init_column_scales
                        .as_ref()
                        .map_or(1.0, |s| s[j]);
                    data.push(gaussian.get(i, j) * init_scale * col_scale);
                }
            }
            let w0 = Matrix::new(*rows, cols, data)?;
            let slots = vec![Slot::new("w", w0, optimizer, cfg.optimizer.is_spectral())];

            let mut grad_rng = Rng::new(seed, STREAM_GRAD);
            let mut grads_of = move |slots: &[Slot]| -> StepGrads {
                let w = &slots[0].value;
                let loss = problem.loss(w)?;
                let grad = problem.grad(w, &mut grad_rng)?;
                Ok((loss, vec![grad]))
            };
            run_loop(cell, slots, &mut grads_of)
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
            let mut data_rng = Rng::new(seed, STREAM_DATA);
            let (x, y) = make_regression_data(&mut data_rng, *n_samples, *d_in, *d_out, *teacher_noise)?;
            let mut init_rng = Rng::new(seed, STREAM_INIT);
            let mlp = ToyMlp::init(*d_in, *d_hidden, *d_out, &mut init_rng);

            // structured parameters take the configured optimizer; biases
            // fall back to AdamW (0.9/0.95 betas) with the same decay
            let fallback = Optimizer::AdamW(AdamWConfig {
                beta1: 0.9,
                beta2: 0.95,
                eps: 1e-8,
                weight_decay: cfg.optimizer.weight_decay(),
            });
            let spectral = cfg.optimizer.is_spectral();
            let pick = |rows: usize, cols: usize| -> Optimizer {
                if spectral && prism_core::optim::is_structured(rows, cols) {
                    optimizer.clone()
                } else {
                    fallback.clone()
                }
            };
            let slots = vec![
                Slot::new("w1", mlp.w1.clone(), pick(mlp.w1.rows(), mlp.w1.cols()), spectral),
                Slot::new("b1", mlp.b1.clone(), pick(1, mlp.b1.cols()), false),
                Slot::new("w2", mlp.w2.clone(), pick(mlp.w2.rows(), mlp.w2.cols()), spectral),
                Slot::new("b2", mlp.b2.clone(), pick(1, mlp.b2.cols()), false),
            ];

            let n = *n_samples;
            let b = *batch_size;
            let mut step_index = 0u64;
            let mut grads_of = move |slots: &[Slot]| -> StepGrads {
                let net = ToyMlp {
                    w1: slots[0].value.clone(),
                    b1: slots[1].value.clone(),
                    w2: slots[2].value.clone(),
                    b2: slots[3].value.clone(),
                };
                // deterministic rotating minibatch
                let start = ((step_index * b as u64) % n as u64) as usize;
                step_index += 1;
                let idx: Vec<usize> = (0..b).map(|k| (start + k) % n).collect();
                let bx = gather_rows(&x, &idx)?;
                let by = gather_rows(&y, &idx)?;
                let (loss, grads) = net.loss_and_gradients(&bx, &by)?;
                Ok((loss, vec![grads.w1, grads.b1, grads.w2, grads.b2]))
            };
            run_loop(cell, slots, &mut grads_of)
        }
    }
}

fn gather_rows(m: &Matrix, indices: &[usize]) -> std::result::Result<Matrix, prism_core::Error> {
    let mut data = Vec::with_capacity(indices.len() * m.cols());
    for &i in indices {
        for j in 0..m.cols() {
            data.push(m.get(i, j));
        }
    }
    Matrix::new(indices.len(), m.cols(), data)
}

fn run_loop(
    cell: &Cell,
    mut slots: Vec<Slot>,
    grads_of: &mut dyn FnMut(&[Slot]) -> StepGrads,
) -> std::result::Result<CellOutput, HarnessError> {
    let cfg = &cell.config;
    let schedule = Schedule {
        warmup_steps: cfg.schedule.warmup_steps,
        total_steps: cfg.run.steps,
        lr_max: cfg.schedule.lr_max,
        lr_final: cfg.schedule.lr_final(),
    };
    schedule.validate()?;

    let probe_side_left = matches!(
        cfg.optimizer,
        OptimizerConfig::Prism {
            side: crate::config::SideConfig::Left,
            ..
        }
    );
    let gamma = probe_gamma(&cfg.optimizer);
    let probe_polar_mode = match cfg.optimizer.build()? {
        Optimizer::Prism(c) => Some(c.polar_mode),
        Optimizer::Muon(c) => Some(c.polar_mode),
        Optimizer::Tikhonov(c) => Some(c.polar_mode),
        Optimizer::AdamW(_) => None,
    };

    let mut metrics = Vec::new();
    let mut spectral_body = String::new();
    let mut tracker = TrajectoryTracker::new();
    let mut initial_loss = None;
    let mut final_loss = None;
    let mut min_loss: Option<f64> = None;
    let mut diverged = false;
    let mut steps_run = 0;

    for step in 1..=cfg.run.steps {
        let started = Instant::now();
        let lr = cosine_schedule(step - 1, &schedule);

        let (loss, grads) = grads_of(&slots).map_err(HarnessError::Core)?;
        if step == 1 && loss.is_finite() {
            initial_loss = Some(loss);
        }
        if loss.is_finite() {
            final_loss = Some(loss);
            min_loss = Some(min_loss.map_or(loss, |m: f64| m.min(loss)));
        } else {
            diverged = true;
        }

        let mut grad_norm = global_norm(&grads);
        let mut update_norm_sq = 0.0;
        let mut momenta = Vec::new();

        if !diverged {
            let (clipped, observed) = clip_gradients(&grads, cfg.run.clip_threshold)?;
            grad_norm = observed;
            'steps: for (slot, grad) in slots.iter_mut().zip(&clipped) {
                match slot.optimizer.step(&slot.value, grad, &mut slot.state, lr) {
                    Ok(out) => {
                        slot.value = out.new_param;
                        update_norm_sq += out.update_norm * out.update_norm;
                        if slot.probeable {
                            momenta.push((slot.name, out.momentum));
                        }
                    }
                    Err(prism_core::Error::NonFinite { .. }) => {
                        // the update overflowed: that is divergence, not a bug
                        diverged = true;
                        break 'steps;
                    }
                    Err(e) => return Err(HarnessError::Core(e)),
                }
            }
        }

        let param_values: Vec<Matrix> = slots.iter().map(|s| s.value.clone()).collect();
        let param_norm = global_norm(&param_values);
        if param_norm > DIVERGENCE_NORM {
            diverged = true;
        }

        steps_run = step;
        metrics.push(MetricsRecord {
            run_id: cell.run_id.clone(),
            step,
            lr,
            loss,
            grad_norm,
            update_fro_norm: update_norm_sq.sqrt(),
            param_fro_norm: param_norm,
            diverged,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });

        if diverged {
            break;
        }

        if cfg.run.probe_every > 0 && step % cfg.run.probe_every == 0 {
            let polar_mode = probe_polar_mode
                .as_ref()
                .expect("probing is validated against spectral optimizers");
            for (name, momentum) in momenta.into_iter().flat_map(|(n, m)| m.map(|m| (n, m))) {
                let (m_view, d_view) = if probe_side_left {
                    (momentum.effective.transpose(), momentum.innovation.transpose())
                } else {
                    (momentum.effective, momentum.innovation)
                };
                match spectral_report(&m_view, &d_view, gamma, polar_mode) {
                    Ok(report) => {
                        tracker.record_gains(&report);
                        report::push_spectral_rows(
                            &mut spectral_body,
                            &cell.run_id,
                            step,
                            name,
                            &report,
                        );
                    }
                    // an all-zero snapshot (e.g. zero gradients so far) has
                    // no spectrum to report; skip the rows, keep the run
                    Err(prism_core::Error::ZeroMatrix { .. }) => continue,
                    Err(e) => return Err(HarnessError::Core(e)),
                }
            }
        }
    }

    let param_values: Vec<Matrix> = slots.iter().map(|s| s.value.clone()).collect();
    let stats = tracker.stats(&param_values, &[]);

    Ok(CellOutput {
        summary: RunSummary {
            run_id: cell.run_id.clone(),
            gamma: cfg.optimizer.gamma(),
            lr_max: cfg.schedule.lr_max,
            steps_run,
            diverged,
            initial_loss,
            final_loss,
            min_loss,
            final_param_norm: stats.param_norm,
            mean_empirical_gain: stats.mean_empirical_gain,
            rank: None,
            config: cfg.clone(),
        },
        metrics,
        spectral_body,
    })
}
