//! PRISM: innovation-augmented spectral descent, with baselines and probes.
//!
//! This crate implements the PRISM optimizer (polar decomposition of an
//! innovation-augmented momentum block), its Muon and Tikhonov-damped
//! baselines, AdamW for unstructured parameters, and the instrumentation
//! needed to verify the spectral-gain theory behind the method:
//!
//! - [`linalg`] — minimal dense real linear algebra: products, norms, a
//!   Newton–Schulz polar iteration, and exact eigendecomposition-based
//!   oracles used for verification.
//! - [`optim`] — the optimizer algorithms, schedules, clipping, and
//!   per-parameter state (with checkpoint serialization).
//! - [`probe`] — eigen-energy decomposition, per-direction SNR, and
//!   theoretical vs. empirical spectral gain reports.
//! - [`problems`] — desk-scale test problems with controllable gradient
//!   noise and a deterministic, splittable RNG.
//!
//! Everything is plain `f64` on the CPU; matrices are immutable row-major
//! values that are cheap to clone at the sizes this crate targets.

pub mod error;
pub mod linalg;
pub mod optim;
pub mod probe;
pub mod problems;

pub use error::{Error, Result};
