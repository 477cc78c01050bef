//! Mood inference from smartphone facial-behavior bursts.
//!
//! The pipeline turns per-frame facial behavior records (action-unit
//! intensities, smile and eye-open probabilities, head pose, 133 2-D
//! landmarks) into binary valence/arousal predictions at three horizons:
//! at the moment of a mood report, the daily average, and the next day's
//! average.
//!
//! Stages, each its own module:
//!
//! 1. [`types`] / [`io`]: the validated data model and the line-oriented
//!    session/survey file formats.
//! 2. [`features`]: the 40-dimensional session feature vector (12 AU means,
//!    smile, 2 eye-open, 3 head Euler angles, 2 eye aspect ratios, 10
//!    inter-vector-angle principal components plus their 10 velocities).
//! 3. [`dataset`]: labeled sample sets per horizon, with per-epoch daily
//!    statistics and lagged next-day features.
//! 4. [`learn`]: random-forest feature selection, SMOTE rebalancing,
//!    decision-tree training with grouped hyperparameter tuning, and
//!    leave-one-participant-out evaluation (F1 / AUC).
//! 5. [`ablation`]: the feature-group ablation grid in both remove-group
//!    and keep-only-group modes.
//! 6. [`synth`]: a deterministic synthetic cohort generator with a
//!    plantable mood signal, standing in for private study data.
//! 7. [`pipeline`] / [`report`] / [`manifest`]: orchestration, table
//!    rendering and the reproducibility manifest consumed by the CLI.
//!
//! With the default `parallel` feature the data-parallel loops (session
//! featurization, forest trees, LOPO folds, ablation cells, cohort
//! generation) run on rayon. Every parallel map preserves input order and
//! every work item derives its own seed, so results are bit-identical at
//! any thread count, and identical to the sequential build
//! (`--no-default-features`).

pub mod ablation;
pub mod config;
pub mod dataset;
pub mod exec;
pub mod features;
pub mod io;
pub mod learn;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod types;

pub use config::RunConfig;
pub use pipeline::{execute_ablate, execute_run, PipelineError};
