//! Least absolute gradient selector (LAGS).
//!
//! Sparse linear regression by minimizing the L1 norm of the least-squares
//! gradient plus a weighted L1 penalty,
//!
//! ```text
//! (1/n) ‖Xᵀ(y − Xβ)‖₁ + λ Σᵢ wᵢ |βᵢ|
//! ```
//!
//! The criterion is piecewise linear, so every fit is solved exactly as a
//! linear program by the dense bounded-variable simplex in [`simplex`].
//! With data-dependent weights (inverse correlation, inverse OLS or inverse
//! ridge) the fitted coefficients stay exactly constant over whole intervals
//! of λ, which [`estimator::fit_path`] detects as constant segments.
//!
//! Module map:
//!
//! * [`data`]: CSV ingestion, standardization, Gram cache.
//! * [`simplex`]: inequality-form LP solver with warm starts.
//! * [`weights`]: penalty weight schemes.
//! * [`estimator`]: LAGS fits, λ paths, weighted Dantzig selector, diagnostics.
//! * [`baselines`]: thresholding operators, Lasso, OLS and ridge.
//! * [`selection`]: k-fold cross-validation and λ selection rules.
//! * [`synth`]: Gaussian simulation designs and Monte Carlo benchmarks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod data;
mod error;
pub mod estimator;
mod linalg;
pub mod selection;
pub mod simplex;
pub mod synth;
pub mod weights;

pub use error::{Error, Result};
