//! Finite-sample minimax treatment rules under mean square regret when the
//! target-population welfare is only partially identified.

// Comparisons like `!(x > 0.0)` are written that way to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod calibration;
pub mod error;
pub mod figure;
pub mod numerics;
pub mod rho;

pub use calibration::{solve_a_star, solve_tau_star, tau_star, CalibrationResult, ProblemSpec, TauStar};
pub use error::{Error, Result};
pub use numerics::{OptimizerConfig, QuadratureConfig};
pub mod regret;
pub mod rules;
pub mod verification;
