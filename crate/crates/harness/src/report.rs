//! Metrics and spectral-report serialization: CSV with a versioned
//! schema comment line, and a JSON summary per run.
//!
//! Infinities serialize as the literals `inf` / `-inf`; undefined values
//! (degenerate SNR) as `NaN`. CSV bytes are deterministic except for the
//! `wall_ms` column, which is excluded from determinism comparisons.

use crate::config::ExperimentConfig;
use prism_core::probe::SpectralReport;
use serde::Serialize;

pub const METRICS_SCHEMA: &str = "#schema=prism-metrics-v1";
pub const METRICS_HEADER: &str =
    "run_id,step,lr,loss,grad_norm,update_fro_norm,param_fro_norm,diverged,wall_ms";
pub const SPECTRAL_SCHEMA: &str = "#schema=prism-spectral-v1";
pub const SPECTRAL_HEADER: &str = "run_id,step,param,k,eigenvalue,signal_energy,noise_energy,snr,gain_theoretical,gain_empirical,gamma";

/// One per-step metrics row.
#[derive(Debug, Clone)]
pub struct MetricsRecord {
    pub run_id: String,
    pub step: u64,
    pub lr: f64,
    pub loss: f64,
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
    /// Norm of the applied update terms across parameters.
    pub update_fro_norm: f64,
    /// Total parameter norm after the step.
    pub param_fro_norm: f64,
    pub diverged: bool,
    pub wall_ms: f64,
}

/// `inf`, `-inf`, and `NaN` literals; shortest round-trip otherwise.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

impl MetricsRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.run_id,
            self.step,
            format_f64(self.lr),
            format_f64(self.loss),
            format_f64(self.grad_norm),
            format_f64(self.update_fro_norm),
            format_f64(self.param_fro_norm),
            self.diverged,
            format_f64(self.wall_ms),
        )
    }
}

pub fn metrics_csv(rows: &[MetricsRecord]) -> String {
    let mut out = String::new();
    out.push_str(METRICS_SCHEMA);
    out.push('\n');
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_row());
        out.push('\n');
    }
    out
}

/// Appends one spectral report (all directions of one parameter at one
/// step) to the spectral CSV body.
pub fn push_spectral_rows(
    out: &mut String,
    run_id: &str,
    step: u64,
    param: &str,
    report: &SpectralReport,
) {
    for d in &report.directions {
        let snr = match d.snr {
            None => "NaN".into(),
            Some(v) => format_f64(v),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            run_id,
            step,
            param,
            d.index,
            format_f64(d.eigenvalue),
            format_f64(d.signal_energy),
            format_f64(d.noise_energy),
            snr,
            format_f64(d.gain_theoretical),
            format_f64(d.gain_empirical),
            format_f64(report.gamma),
        ));
    }
}

pub fn spectral_csv(body: &str) -> String {
    format!("{SPECTRAL_SCHEMA}\n{SPECTRAL_HEADER}\n{body}")
}

/// Per-run summary (one JSON object per grid cell).
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub lr_max: f64,
    pub steps_run: u64,
    pub diverged: bool,
    /// Loss observed at the first step (None if it was already non-finite).
    pub initial_loss: Option<f64>,
    /// Last finite loss.
    pub final_loss: Option<f64>,
    /// Smallest finite loss.
    pub min_loss: Option<f64>,
    pub final_param_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_empirical_gain: Option<f64>,
    /// Rank by final loss (1 = best), set by sweeps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    /// The fully resolved configuration this cell ran with.
    pub config: ExperimentConfig,
}

/// Sorts summaries for ranking: finite final loss ascending, ties broken
/// by lower gamma then lower lr; diverged / lossless runs rank last.
pub fn assign_ranks(summaries: &mut [RunSummary]) {
    let mut order: Vec<usize> = (0..summaries.len()).collect();
    order.sort_by(|&a, &b| {
        let sa = &summaries[a];
        let sb = &summaries[b];
        let la = sa.final_loss.unwrap_or(f64::INFINITY);
        let lb = sb.final_loss.unwrap_or(f64::INFINITY);
        la.partial_cmp(&lb)
            .unwrap()
            .then_with(|| {
                let ga = sa.gamma.unwrap_or(f64::INFINITY);
                let gb = sb.gamma.unwrap_or(f64::INFINITY);
                ga.partial_cmp(&gb).unwrap()
            })
            .then_with(|| sa.lr_max.partial_cmp(&sb.lr_max).unwrap())
    });
    for (rank, idx) in order.into_iter().enumerate() {
        summaries[idx].rank = Some(rank + 1);
    }
}

#[derive(Debug, Serialize)]
pub struct SummaryDocument<'a> {
    pub schema: &'static str,
    pub runs: &'a [RunSummary],
}

pub fn summary_json(summaries: &[RunSummary]) -> String {
    let doc = SummaryDocument {
        schema: "prism-summary-v1",
        runs: summaries,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("summary is serializable");
    text.push('\n');
    text
}

/// Strips the `wall_ms` column (the last one) from every data row of a
/// metrics CSV, for byte-level determinism comparisons.
pub fn strip_wall_ms(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            if line.starts_with('#') || line.starts_with("run_id") {
                line.to_string()
            } else {
                match line.rfind(',') {
                    Some(pos) => line[..pos].to_string(),
                    None => line.to_string(),
                }
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}
