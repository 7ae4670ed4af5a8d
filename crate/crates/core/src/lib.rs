//! Rotor deterioration prognosis toolkit.
//!
//! Rotating machinery (compressors, steam and gas turbines) deteriorates
//! through three operating states before a breakdown: normal, risky, and
//! high-risk, defined by the time remaining until failure. This crate
//! implements the full desk-scale pipeline for predicting those states from
//! vibration waves and for scoring predictors the way an operator would:
//!
//! * [`signal`] — wave representation, FFT amplitude spectra, orthogonal
//!   discrete wavelet decomposition, and wavelet denoising.
//! * [`features`] — the 24 per-sensor time/time-frequency features and the
//!   144-feature machine-level record.
//! * [`selection`] — coefficient-of-variation and random-forest importance
//!   filters, plus boxplot statistics for human review.
//! * [`metrics`] — the online prediction ability index: a time-weighted
//!   accuracy score `S` whose per-sample penalties grow toward the failure,
//!   and a consistency score `C` that penalizes prediction flicker.
//! * [`classifiers`] — from-scratch KNN, random forest, and single-hidden-layer
//!   MLP with z-score standardization and stratified k-fold cross-validation.
//! * [`cascade`] — interval labeling, train/test splitting, under-sampling,
//!   two-stage (normal-abnormal then risky-high-risk) and ternary training,
//!   evaluation, and model-combination ranking.
//! * [`datagen`] — a seeded synthetic vibration fleet generator so the whole
//!   pipeline can be exercised without proprietary plant data.
//! * [`pipeline`], [`io`], [`config`], [`report`] — the end-to-end steps and
//!   the CSV/TOML/SVG plumbing behind the CLI.
//!
//! Everything is deterministic given the configured seed: no wall-clock or
//! environment entropy enters any computation.

pub mod cascade;
pub mod classifiers;
pub mod config;
pub mod datagen;
pub mod features;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod selection;
pub mod signal;

pub(crate) mod seeding;

pub use cascade::StateLabel;
pub use metrics::{LoopLayout, OpaiReport, PredictionSeries};
pub use signal::{Wave, WaveArray};
