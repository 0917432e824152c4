//! Monte-Carlo study of loss stability and cross-validation inference for
//! soft-thresholded least squares, ridge and the Lasso under a Gaussian
//! linear model.
//!
//! * [`linmodel`]: the data-generating model, losses and conditional risks.
//! * [`estimators`]: the learners and their penalty rules.
//! * [`cv`]: k-fold CV error, test error, variance estimate and intervals.
//! * [`stability`]: `σ²`, `γ`, `r` and the constant `C` by Monte Carlo.
//! * [`harness`]: experiment configs, runners and CSV output.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cv;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod linmodel;
pub mod numeric;
pub mod rng;
pub mod stability;

pub use error::{Error, Result};
