//! The expected squared logistic weight and its relatives.
//!
//! With `w_s(y) = 1 / (1 + exp(2 s y))`:
//!
//! * `rho_shifted(s, c) = E[w_s(Y)^2]`, `Y ~ N(c, 1)`
//! * `rho(a) = rho_shifted(a, a)`
//! * `rho_prime(a) = d/da rho(a)`, both slope and center moving together.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gauss_expectation, QuadratureConfig};

/// Logistic `1 / (1 + exp(-x))`, evaluated without overflow for any finite `x`.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// The decreasing weight `w(y) = 1 / (1 + exp(2 slope y))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticWeight {
    slope: f64,
}

impl LogisticWeight {
    pub fn new(slope: f64) -> Result<Self> {
        check_slope(slope)?;
        Ok(Self { slope })
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        logistic(-2.0 * self.slope * y)
    }

    /// `1 - w(y)`, which equals `w(-y)`.
    #[inline]
    pub fn complement(&self, y: f64) -> f64 {
        logistic(2.0 * self.slope * y)
    }
}

fn check_slope(slope: f64) -> Result<()> {
    if slope.is_finite() && slope >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("logistic slope must be finite and non-negative, got {slope}")))
    }
}

fn check_center(center: f64) -> Result<()> {
    if center.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("center must be finite, got {center}")))
    }
}

pub fn rho(a: f64) -> Result<f64> {
    rho_with(a, &QuadratureConfig::default())
}

pub fn rho_with(a: f64, cfg: &QuadratureConfig) -> Result<f64> {
    rho_shifted_with(a, a, cfg)
}

pub fn rho_shifted(slope: f64, center: f64) -> Result<f64> {
    rho_shifted_with(slope, center, &QuadratureConfig::default())
}

pub fn rho_shifted_with(slope: f64, center: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let w = LogisticWeight::new(slope)?;
    check_center(center)?;
    if slope == 0.0 {
        return Ok(0.25);
    }
    gauss_expectation(
        |y| {
            let v = w.eval(y);
            v * v
        },
        center,
        cfg,
    )
}

/// Derivative of [`rho`], from the analytic integrand
/// `[-4 y w^2 (1 - w) + w^2 (y - a)] phi(y - a)`.
pub fn rho_prime(a: f64) -> Result<f64> {
    rho_prime_with(a, &QuadratureConfig::default())
}

pub fn rho_prime_with(a: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let w = LogisticWeight::new(a)?;
    if a == 0.0 {
        // w is constant 1/2 and y - 0 integrates to zero.
        return Ok(0.0);
    }
    gauss_expectation(
        |y| {
            let v = w.eval(y);
            let v2 = v * v;
            -4.0 * y * v2 * (1.0 - v) + v2 * (y - a)
        },
        a,
        cfg,
    )
}

/// Derivative of `rho_shifted(slope, c)` in the center `c` with the slope held fixed.
pub fn rho_shifted_prime_with(slope: f64, center: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let w = LogisticWeight::new(slope)?;
    check_center(center)?;
    if slope == 0.0 {
        return Ok(0.0);
    }
    gauss_expectation(
        |y| {
            let v = w.eval(y);
            v * v * (y - center)
        },
        center,
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_at_zero_is_quarter() {
        assert_eq!(rho(0.0).unwrap(), 0.25);
        // Also through the quadrature path with a vanishing slope.
        let v = gauss_expectation(|_| 0.25, 0.0, &QuadratureConfig::default()).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rho_is_in_range() {
        for i in 0..=100 {
            let a = i as f64 * 0.1;
            let r = rho(a).unwrap();
            assert!(r > 0.0 && r <= 0.25, "rho({a}) = {r}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(rho(-0.1), Err(Error::Domain(_))));
        assert!(matches!(rho(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(rho_shifted(1.0, f64::INFINITY), Err(Error::Domain(_))));
        assert!(matches!(rho_prime(-1.0), Err(Error::Domain(_))));
        assert!(LogisticWeight::new(-1.0).is_err());
    }

    #[test]
    fn shifted_at_own_slope_is_rho() {
        for a in [0.1, 0.5, 1.23, 2.7] {
            assert_eq!(rho_shifted(a, a).unwrap(), rho(a).unwrap());
        }
    }

    #[test]
    fn zero_slope_is_quarter_everywhere() {
        for c in [-5.0, 0.0, 3.3] {
            assert_eq!(rho_shifted(0.0, c).unwrap(), 0.25);
        }
    }

    #[test]
    fn weight_is_symmetric() {
        let w = LogisticWeight::new(0.9).unwrap();
        assert_eq!(w.eval(0.0), 0.5);
        for y in [-40.0, -3.0, -0.2, 0.7, 5.0, 800.0] {
            assert!((w.eval(y) + w.eval(-y) - 1.0).abs() < 1e-15);
            assert_eq!(w.complement(y), w.eval(-y));
        }
    }

    #[test]
    fn logistic_saturates_without_overflow() {
        assert_eq!(logistic(1000.0), 1.0);
        assert_eq!(logistic(-1000.0), 0.0);
        assert_eq!(logistic(0.0), 0.5);
    }

    #[test]
    fn reflection_identity() {
        // rho_shifted(1, -1) = E[(1 - w)^2] at center +1 = 1 - 2 E[w] + rho_shifted(1, 1).
        let cfg = QuadratureConfig::default();
        let w = LogisticWeight::new(1.0).unwrap();
        let mean_w = gauss_expectation(|y| w.eval(y), 1.0, &cfg).unwrap();
        let lhs = rho_shifted(1.0, -1.0).unwrap();
        let rhs = 1.0 - 2.0 * mean_w + rho_shifted(1.0, 1.0).unwrap();
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn decays_far_to_the_right() {
        // w^2 ~ exp(-4 a y) in the right tail, so rho_shifted(a, c) ~ exp(-4 a c + 8 a^2).
        for a in [0.05, 0.1, 0.3, 1.0, 3.0] {
            let c = 30.0;
            let v = rho_shifted(a, c).unwrap();
            let envelope = (-4.0 * a * c + 8.0 * a * a).exp();
            assert!(v > 0.0 && v <= envelope, "a = {a}: {v} vs {envelope}");
        }
        for a in [0.2, 0.3, 1.0, 3.0] {
            assert!(rho_shifted(a, 30.0).unwrap() < 1e-8);
        }
        assert!(rho_shifted(0.05, 100.0).unwrap() < 1e-8);
        // Small slopes decay slowly.
        assert!(rho_shifted(0.05, 30.0).unwrap() > 1e-3);
    }

    #[test]
    fn derivative_vanishes_at_zero() {
        assert_eq!(rho_prime(0.0).unwrap(), 0.0);
        assert!(rho_prime(1e-9).unwrap().abs() < 1e-8);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-5;
        let a = 0.8;
        let fd = (rho(a + h).unwrap() - rho(a - h).unwrap()) / (2.0 * h);
        assert!((rho_prime(a).unwrap() - fd).abs() < 1e-7);
    }

    #[test]
    fn shifted_derivative_matches_central_difference() {
        let h = 1e-5;
        let cfg = QuadratureConfig::tight();
        for (s, c) in [(0.7, -0.4), (1.2, 1.0), (0.2, 3.0)] {
            let fd = (rho_shifted_with(s, c + h, &cfg).unwrap() - rho_shifted_with(s, c - h, &cfg).unwrap()) / (2.0 * h);
            assert!((rho_shifted_prime_with(s, c, &cfg).unwrap() - fd).abs() < 1e-8);
        }
    }
}
