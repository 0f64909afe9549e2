//! Gaussian-process kernel banks for model-based vehicular communication.
//!
//! A transmitting vehicle forecasts its own trajectory with a Gaussian
//! process, broadcasts the model instead of raw kinematic state, and only
//! sends an update when the receiver's tracking error would exceed a
//! threshold. This crate builds finite banks of reusable GP kernels for that
//! purpose, in two flavours: regressing ENU position directly, or regressing
//! speed and heading and integrating them into position.
//!
//! Modules:
//! - [`gp`]: kernel evaluation, exact inference, hyperparameter fitting.
//! - [`geo`]: trip ingestion, WGS-84 to ENU, channel extraction, trip ranking.
//! - [`bank`]: kernel bank construction and model persistency accounting.
//! - [`mbcsim`]: error-driven packet scheduling with a shadow receiver.
//! - [`synth`]: deterministic synthetic trip corpus.

// `!(a > b)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bank;
pub mod error;
pub mod geo;
pub mod gp;
pub mod mbcsim;
pub mod synth;

pub use error::{Error, Result};

/// Nominal GPS sampling period in seconds (10 Hz).
pub const SAMPLE_PERIOD_S: f64 = 0.1;
