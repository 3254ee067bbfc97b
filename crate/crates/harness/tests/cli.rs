//! CLI-level behavior: exit codes, subcommand requirements, file output.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_prism")
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL: &str = r#"
[problem]
kind = "noisy-quadratic"
rows = 4
curvature = [1.0, 2.0]
noise_scales = [0.1, 0.5]
seed = 5

[optimizer]
kind = "prism"
polar = "exact"

[schedule]
warmup_steps = 2
lr_max = 0.05

[run]
steps = 6
"#;

#[test]
fn run_writes_outputs_and_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out_dir = tmp.path().join("out");
    let output = Command::new(bin())
        .args(["run"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(out_dir.join("metrics.csv").exists());
    assert!(out_dir.join("summary.json").exists());
    assert!(!out_dir.join("spectral.csv").exists(), "no probing configured");

    let metrics = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("#schema=prism-metrics-v1\n"));
}

#[test]
fn invalid_config_fails_before_any_work() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("steps = 6", "steps = 0"));
    let out_dir = tmp.path().join("out");
    let output = Command::new(bin())
        .args(["run"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(!out_dir.exists(), "no output may be produced for a bad config");
    assert!(String::from_utf8_lossy(&output.stderr).contains("steps"));
}

#[test]
fn probe_requires_probe_every() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let output = Command::new(bin())
        .args(["probe"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("probe_every"));
}

#[test]
fn sweep_requires_a_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let output = Command::new(bin())
        .args(["sweep"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("grid"));
}

#[test]
fn sweep_prints_a_ranked_table() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.to_string() + "\n[grid]\ngamma = [0.0, 1.0]\n";
    let cfg = write_config(tmp.path(), &text);
    let out_dir = tmp.path().join("out");
    let output = Command::new(bin())
        .args(["sweep"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("--threads")
        .arg("2")
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("rank"), "missing table header: {stdout}");
    assert!(stdout.contains("cell000-gamma0"));

    let summary = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(doc["schema"], "prism-summary-v1");
    assert_eq!(doc["runs"].as_array().unwrap().len(), 2);
    assert!(doc["runs"][0]["rank"].is_number());
}

#[test]
fn thread_count_does_not_change_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.to_string() + "\n[grid]\ngamma = [0.0, 0.5, 1.0, 2.0]\n";
    let cfg = write_config(tmp.path(), &text);
    let run = |threads: &str, out: &Path| {
        let output = Command::new(bin())
            .args(["run"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .args(["--threads", threads])
            .output()
            .unwrap();
        assert!(output.status.success());
        std::fs::read_to_string(out.join("metrics.csv")).unwrap()
    };
    let single = run("1", &tmp.path().join("t1"));
    let multi = run("4", &tmp.path().join("t4"));
    let strip = prism_harness::report::strip_wall_ms;
    assert_eq!(strip(&single), strip(&multi));
}

#[test]
fn seed_override_changes_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let run = |seed: &str, out: &Path| {
        let output = Command::new(bin())
            .args(["run"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .args(["--seed", seed])
            .output()
            .unwrap();
        assert!(output.status.success());
        std::fs::read_to_string(out.join("metrics.csv")).unwrap()
    };
    let a = run("5", &tmp.path().join("a"));
    let b = run("6", &tmp.path().join("b"));
    let c = run("5", &tmp.path().join("c"));
    let strip = prism_harness::report::strip_wall_ms;
    assert_ne!(strip(&a), strip(&b), "different seeds must change the data");
    assert_eq!(strip(&a), strip(&c), "same seed must reproduce the data");
}

#[test]
fn exact_polar_flag_is_accepted_on_shipped_configs() {
    // quickstart already uses exact mode; the flag must be harmless and
    // the run identical
    let tmp = tempfile::tempdir().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for (out, extra) in [(&out_a, false), (&out_b, true)] {
        let mut cmd = Command::new(bin());
        cmd.args(["run"]).arg(config("quickstart.toml")).arg("--out").arg(out);
        if extra {
            cmd.arg("--exact-polar");
        }
        assert!(cmd.output().unwrap().status.success());
    }
    let strip = prism_harness::report::strip_wall_ms;
    let a = std::fs::read_to_string(out_a.join("metrics.csv")).unwrap();
    let b = std::fs::read_to_string(out_b.join("metrics.csv")).unwrap();
    assert_eq!(strip(&a), strip(&b));
}
