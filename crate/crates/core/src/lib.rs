//! Adaptive proximal inexact gradient (APIG) methods for composite problems
//! `min f(x) + h(x)` where `f` can only be evaluated approximately, together
//! with a dual solver for SINR-constrained beamforming under per-antenna
//! power budgets whose inner subproblem is solved by fixed-point iteration.
//!
//! Module map:
//!
//! - [`prox`]: proximal operators, gradient mapping, stationarity residual.
//! - [`oracle`]: inexact evaluations, error budgets, and noise injectors.
//! - [`apig`]: the backtracking driver with alternate Barzilai-Borwein trial steps.
//! - [`problems`]: synthetic test problems with exact oracles and reference optima.
//! - [`beamforming`]: Thompson-metric fixed points, inexact dual oracle, APIG-FP and PSG.

pub mod apig;
pub mod beamforming;
mod error;
pub mod oracle;
pub mod problems;
pub mod prox;

pub use error::{Error, Result};

/// Dense real vector used for iterates, gradients and multipliers.
pub type Vector = nalgebra::DVector<f64>;
