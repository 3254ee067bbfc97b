//! Experiment harness for the PRISM optimizer suite.
//!
//! Loads a declarative TOML experiment description, runs optimizer /
//! problem combinations over seeds and hyperparameter grids (γ sweeps,
//! learning-rate stress tests, Tikhonov ablations), and emits per-step
//! metrics plus per-direction spectral reports as CSV, with a JSON
//! summary per run.
//!
//! Runs are deterministic: the same config file produces byte-identical
//! CSV output (the `wall_ms` column excepted), regardless of thread count.

pub mod config;
pub mod report;
pub mod runner;

use std::fmt;

#[derive(Debug)]
pub enum HarnessError {
    /// Invalid or inconsistent experiment configuration.
    Config(String),
    Io(std::io::Error),
    Core(prism_core::Error),
    Toml(toml::de::Error),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(msg) => write!(f, "config error: {msg}"),
            HarnessError::Io(e) => write!(f, "io error: {e}"),
            HarnessError::Core(e) => write!(f, "{e}"),
            HarnessError::Toml(e) => write!(f, "config parse error: {e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

impl From<prism_core::Error> for HarnessError {
    fn from(e: prism_core::Error) -> Self {
        HarnessError::Core(e)
    }
}

impl From<toml::de::Error> for HarnessError {
    fn from(e: toml::de::Error) -> Self {
        HarnessError::Toml(e)
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
