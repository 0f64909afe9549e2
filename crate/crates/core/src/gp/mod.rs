//! Gaussian-process regression over a single time-indexed channel.
//!
//! Windows are re-based so their first timestamp is zero and standardized to
//! zero mean and unit variance before conditioning. Hyperparameters therefore
//! describe the shape of a window rather than its absolute position or scale,
//! which is what lets a fitted kernel be reused on other windows.

mod fit;
mod kernel;
mod posterior;

pub use fit::{fit_hyperparameters, fit_with_diagnostics, Bounds, FitConfig, FitOutcome};
pub use kernel::{cholesky_with_jitter, gram_matrix, kernel_eval, KernelSpec, JITTER_MAX, JITTER_START};
pub use posterior::{
    log_marginal_likelihood, log_marginal_likelihood_with_gradient, posterior_predict, ConditionedGp, Posterior,
    Standardized, TrainingWindow, STD_FLOOR,
};
