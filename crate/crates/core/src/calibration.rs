//! The two scalar optimizations behind the optimal rule: the universal
//! constant `tau*` maximizing `t^2 rho(t)`, and the problem-specific
//! coefficient `a*` maximizing `(a + k/sigma)^2 rho(a)` on `[0, tau*]`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{find_root, maximize_fallible, OptimizerConfig, QuadratureConfig};
use crate::rho::{rho_prime_with, rho_with};

/// Upper end of the `tau*` search. The objective there must sit below 10%
/// of the interior maximum.
pub const TAU_SEARCH_MAX: f64 = 6.0;
const TAU_TAIL_FRACTION: f64 = 0.1;
const SOC_STEP: f64 = 1e-4;

/// The known environment: identified-set half-width `k` and sampling
/// standard deviation `sigma`, both in welfare units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    k: f64,
    sigma: f64,
}

impl ProblemSpec {
    pub fn new(k: f64, sigma: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::domain(format!("k must be finite and non-negative, got {k}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(format!("sigma must be finite and positive, got {sigma}")));
        }
        Ok(Self { k, sigma })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `k / sigma`, the only way the optimal coefficient depends on the spec.
    pub fn ratio(&self) -> f64 {
        self.k / self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauStar {
    pub tau_star: f64,
    /// `tau*^2 rho(tau*)`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub tau_star: f64,
    pub a_star: f64,
    /// `sigma^2 (a* + k/sigma)^2 rho(a*)`.
    pub worst_case_msr: f64,
    pub foc_residual: f64,
    pub soc_value: f64,
    pub grid_points_used: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Maximizes `t^2 rho(t)` over `[0, 6]`; the maximizer is then polished as
/// the root of `2 rho(t) + t rho'(t)` inside its grid cell.
pub fn solve_tau_star(cfg: &OptimizerConfig) -> Result<TauStar> {
    let q = QuadratureConfig::default();
    let objective = |t: f64| rho_with(t, &q).map(|r| t * t * r);
    let found = maximize_fallible(objective, 0.0, TAU_SEARCH_MAX, cfg)?;

    let tail = objective(TAU_SEARCH_MAX)?;
    if tail >= TAU_TAIL_FRACTION * found.value {
        return Err(Error::domain(format!(
            "t^2 rho(t) = {tail} at the search bound is not negligible against the maximum {}",
            found.value
        )));
    }

    let cell = TAU_SEARCH_MAX / (cfg.grid_points - 1) as f64;
    let stationarity = |t: f64| Ok(2.0 * rho_with(t, &q)? + t * rho_prime_with(t, &q)?);
    let tau = polish(stationarity, found.argmax, cell, 1e-12, TAU_SEARCH_MAX).unwrap_or(found.argmax);
    Ok(TauStar {
        tau_star: tau,
        value: objective(tau)?,
    })
}

static TAU_STAR: OnceLock<Result<TauStar>> = OnceLock::new();

/// Process-wide `tau*`, computed once with default settings.
pub fn tau_star() -> Result<TauStar> {
    TAU_STAR
        .get_or_init(|| solve_tau_star(&OptimizerConfig::default()))
        .clone()
}

// Root of `stationarity` within one grid cell of `guess`, or None when the
// cell does not bracket a sign change.
fn polish<F: Fn(f64) -> Result<f64>>(stationarity: F, guess: f64, cell: f64, x_tol: f64, upper: f64) -> Option<f64> {
    let lo = (guess - cell).max(0.0);
    let hi = (guess + cell).min(upper);
    find_root(&stationarity, lo, hi, x_tol).ok()
}

/// `2 rho(a) + (a + k/sigma) rho'(a)`; zero at an interior `a*`.
pub fn foc_residual(a: f64, spec: &ProblemSpec) -> Result<f64> {
    let tau = tau_star()?.tau_star;
    if !(a.is_finite() && a >= 0.0 && a <= tau + 1e-8) {
        return Err(Error::domain(format!("a must lie in [0, tau* = {tau}], got {a}")));
    }
    foc_unchecked(a, spec.ratio(), &QuadratureConfig::default())
}

fn foc_unchecked(a: f64, ratio: f64, q: &QuadratureConfig) -> Result<f64> {
    Ok(2.0 * rho_with(a, q)? + (a + ratio) * rho_prime_with(a, q)?)
}

// rho is even in its argument, so rho' is odd.
fn rho_prime_signed(a: f64, q: &QuadratureConfig) -> Result<f64> {
    let d = rho_prime_with(a.abs(), q)?;
    Ok(if a < 0.0 { -d } else { d })
}

/// `3 rho'(a) + (a + k/sigma) rho''(a)`, with `rho''` by central differences
/// of `rho'`. Negative at a maximizer.
pub fn soc_value(a: f64, spec: &ProblemSpec) -> Result<f64> {
    let q = QuadratureConfig::default();
    let d1 = rho_prime_with(a, &q)?;
    let d2 = (rho_prime_signed(a + SOC_STEP, &q)? - rho_prime_signed(a - SOC_STEP, &q)?) / (2.0 * SOC_STEP);
    Ok(3.0 * d1 + (a + spec.ratio()) * d2)
}

/// The hardest-subproblem objective `(a + ratio)^2 rho(a)`.
pub fn hardest_objective(a: f64, ratio: f64) -> Result<f64> {
    rho_with(a, &QuadratureConfig::default()).map(|r| (a + ratio).powi(2) * r)
}

pub fn solve_a_star(spec: &ProblemSpec, cfg: &OptimizerConfig) -> Result<CalibrationResult> {
    let tau = tau_star()?.tau_star;
    let ratio = spec.ratio();
    let q = QuadratureConfig::default();
    let mut warnings = Vec::new();

    let a_star = if spec.k() == 0.0 {
        tau
    } else {
        let found = maximize_fallible(|a| hardest_objective(a, ratio), 0.0, tau, cfg)?;
        if found.grid_ties > 1 {
            warnings.push(format!(
                "{} grid points tie the maximum of (a + k/sigma)^2 rho(a) within 1e-12",
                found.grid_ties
            ));
        }
        let cell = tau / (cfg.grid_points - 1) as f64;
        match polish(|a| foc_unchecked(a, ratio, &q), found.argmax, cell, 1e-14, tau) {
            Some(root) if hardest_objective(root, ratio)? >= found.value - 1e-12 * found.value.abs() => root,
            _ => {
                warnings.push("first-order condition not bracketed around the grid maximizer".into());
                found.argmax
            }
        }
    };

    let rho_a = rho_with(a_star, &q)?;
    Ok(CalibrationResult {
        tau_star: tau,
        a_star,
        worst_case_msr: spec.sigma().powi(2) * (a_star + ratio).powi(2) * rho_a,
        foc_residual: foc_unchecked(a_star, ratio, &q)?,
        soc_value: soc_value(a_star, spec)?,
        grid_points_used: cfg.grid_points,
        warnings,
    })
}
