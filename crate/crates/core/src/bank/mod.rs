//! Kernel banks: building, reusing and scoring models that predict vehicle
//! position.
//!
//! A model is either a pair of fitted GP kernels, one per channel, or the
//! constant-velocity predictor. The direct scheme regresses east and north
//! position; the indirect scheme regresses speed and heading and integrates
//! them. A model stays selected until its position tracking error (PTE)
//! exceeds the threshold; the time it lasts is its persistency.

mod build;
mod entry;
mod predict;
mod select;

pub use build::{
    build_bank, extend_bank, persistency_stats, persistency_stats_of, MetricRow, PersistencyStats, RunMetrics,
    HISTOGRAM_BINS, HISTOGRAM_BIN_S,
};
pub use entry::{BankEntry, BankRecord, ChannelSpecs, CreatedAt, KernelBank};
pub use predict::{
    compute_pte, integrate_position, Anchor, ConditioningWindow, Integrator, Model, Prediction, Rollout, Scheme,
};
pub use select::{
    create_entry, evaluate_candidate, evaluate_model, extend_selection, fit_channel_specs, pick_best, run_rollout,
    select_or_create, BankConfig, Candidate, ModelSelection, ReuseEval, SelectionSource,
};
