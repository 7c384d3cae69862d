//! Sediment pollution analysis toolkit.
//!
//! The pipeline turns raw element-concentration tables into pollution-class
//! labels, benchmarks missing-data imputation methods under a masking/SMAPE
//! protocol, and trains a suite of classifiers (including a configurable
//! feedforward network) to predict the pollution class.
//!
//! Modules mirror the pipeline stages:
//!
//! * [`data`] — tabular types with an explicit missingness mask, CSV ingestion,
//!   train/test splitting.
//! * [`indices`] — the four pollution indicators (Igeo, EF, PLI, PER), their
//!   merger-score functions and class labelling.
//! * [`impute`] — mean, kNN, truncated-SVD and round-robin iterative imputation.
//! * [`preprocess`] — feature scaling and SMOTE oversampling.
//! * [`models`] — the classifier suite and the network engine.
//! * [`eval`] — SMAPE and classification metrics.
//! * [`bench`] — masking protocol, imputation benchmark, model comparison and
//!   network-tuning harnesses.
//! * [`synth`] — seeded synthetic dataset generators used as benchmark ground
//!   truth.

pub mod bench;
pub mod data;
pub mod eval;
pub mod impute;
pub mod indices;
pub mod models;
pub mod preprocess;
pub mod seed;
pub mod synth;
