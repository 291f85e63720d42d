//! Treatment rules: maps from the experimental estimate `theta_e_hat`
//! (welfare units) to the fraction of the target population treated.

use serde::{Deserialize, Serialize};

use crate::calibration::{solve_a_star, tau_star, ProblemSpec};
use crate::error::{Error, Result};
use crate::numerics::{std_normal_cdf, OptimizerConfig};
use crate::rho::logistic;

/// `sqrt(pi / 2)`: below this `k / sigma` the empirical success rule is
/// minimax for mean regret.
pub const MEAN_REGRET_THRESHOLD: f64 = 1.253_314_137_315_500_3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum TreatmentRule {
    /// `logistic(2 a theta_e_hat / sigma)` with `0 < a <= tau*`.
    MsrOptimal { a_coeff: f64, sigma: f64 },
    /// The point-identified rule `logistic(2 tau* theta_e_hat / sigma)`.
    PointIdLogistic { tau_star: f64, sigma: f64 },
    /// `1{theta_e_hat >= 0}`.
    MeanRegretStep,
    /// `Phi(theta_e_hat / scale)`.
    MeanRegretGaussian { scale: f64 },
    ConstantHalf,
    /// `logistic(2 slope_over_sigma theta_e_hat)`; a negative slope gives a
    /// decreasing rule.
    CustomLogistic { slope_over_sigma: f64 },
}

impl TreatmentRule {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be finite and positive, got {v}")))
            }
        };
        match *self {
            TreatmentRule::MsrOptimal { a_coeff, sigma } => {
                positive("a_coeff", a_coeff)?;
                positive("sigma", sigma)
            }
            TreatmentRule::PointIdLogistic { tau_star, sigma } => {
                positive("tau_star", tau_star)?;
                positive("sigma", sigma)
            }
            TreatmentRule::MeanRegretGaussian { scale } => positive("scale", scale),
            TreatmentRule::CustomLogistic { slope_over_sigma } if !slope_over_sigma.is_finite() => {
                Err(Error::domain("slope_over_sigma must be finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TreatmentRule::MsrOptimal { .. } => "MsrOptimal",
            TreatmentRule::PointIdLogistic { .. } => "PointIdLogistic",
            TreatmentRule::MeanRegretStep => "MeanRegretStep",
            TreatmentRule::MeanRegretGaussian { .. } => "MeanRegretGaussian",
            TreatmentRule::ConstantHalf => "ConstantHalf",
            TreatmentRule::CustomLogistic { .. } => "CustomLogistic",
        }
    }

    /// Treatment fraction at a finite observation.
    pub fn evaluate(&self, observation: f64) -> Result<f64> {
        if !observation.is_finite() {
            return Err(Error::domain(format!("observation must be finite, got {observation}")));
        }
        self.validate()?;
        Ok(self.fraction(observation))
    }

    /// Unchecked evaluation for integrands; callers validate once up front.
    #[inline]
    pub(crate) fn fraction(&self, x: f64) -> f64 {
        match *self {
            TreatmentRule::MsrOptimal { a_coeff, sigma } => logistic(2.0 * a_coeff * x / sigma),
            TreatmentRule::PointIdLogistic { tau_star, sigma } => logistic(2.0 * tau_star * x / sigma),
            TreatmentRule::MeanRegretStep => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            TreatmentRule::MeanRegretGaussian { scale } => std_normal_cdf(x / scale),
            TreatmentRule::ConstantHalf => 0.5,
            TreatmentRule::CustomLogistic { slope_over_sigma } => logistic(2.0 * slope_over_sigma * x),
        }
    }

    /// Logistic slope per unit of observation, for the logistic families.
    pub fn logistic_slope(&self) -> Option<f64> {
        match *self {
            TreatmentRule::MsrOptimal { a_coeff, sigma } => Some(a_coeff / sigma),
            TreatmentRule::PointIdLogistic { tau_star, sigma } => Some(tau_star / sigma),
            TreatmentRule::CustomLogistic { slope_over_sigma } => Some(slope_over_sigma),
            TreatmentRule::ConstantHalf => Some(0.0),
            _ => None,
        }
    }

    /// Jump locations of the rule, used as quadrature panel edges.
    pub fn discontinuities(&self) -> &'static [f64] {
        match self {
            TreatmentRule::MeanRegretStep => &[0.0],
            _ => &[],
        }
    }

    /// Every built-in variant satisfies `d(x) + d(-x) = 1` (the step rule
    /// everywhere except at 0).
    pub fn is_symmetric(&self) -> bool {
        true
    }
}

/// The minimax mean-square-regret rule `logistic(2 a* theta_e_hat / sigma)`.
pub fn msr_optimal_rule(spec: &ProblemSpec) -> Result<TreatmentRule> {
    let cal = solve_a_star(spec, &OptimizerConfig::default())?;
    Ok(TreatmentRule::MsrOptimal {
        a_coeff: cal.a_star,
        sigma: spec.sigma(),
    })
}

pub fn point_id_rule(sigma: f64) -> Result<TreatmentRule> {
    let rule = TreatmentRule::PointIdLogistic {
        tau_star: tau_star()?.tau_star,
        sigma,
    };
    rule.validate()?;
    Ok(rule)
}

/// The minimax mean-regret rule: the empirical success rule while
/// `k <= sqrt(pi/2) sigma`, a Gaussian-CDF fractional rule beyond.
pub fn mean_regret_rule(spec: &ProblemSpec) -> TreatmentRule {
    let (k, sigma) = (spec.k(), spec.sigma());
    if k <= MEAN_REGRET_THRESHOLD * sigma {
        return TreatmentRule::MeanRegretStep;
    }
    let scale2 = 2.0 * k * k / std::f64::consts::PI - sigma * sigma;
    if scale2 > 0.0 {
        TreatmentRule::MeanRegretGaussian { scale: scale2.sqrt() }
    } else {
        // Rounding right at the threshold.
        TreatmentRule::MeanRegretStep
    }
}

/// A one-dimensional subproblem: the segment `{s (a_e, a_t) : s in [-1, 1]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubproblemSpec {
    pub a_e: f64,
    pub a_t: f64,
}

impl SubproblemSpec {
    pub fn new(a_e: f64, a_t: f64) -> Result<Self> {
        if !(a_e.is_finite() && a_e >= 0.0) || !a_t.is_finite() {
            return Err(Error::domain(format!("invalid subproblem (a_e = {a_e}, a_t = {a_t})")));
        }
        Ok(Self { a_e, a_t })
    }

    /// Checks `|a_t - a_e| <= k`, so that the whole segment lies in the
    /// parameter space.
    pub fn check_within(&self, spec: &ProblemSpec) -> Result<()> {
        Self::new(self.a_e, self.a_t)?;
        if (self.a_t - self.a_e).abs() > spec.k() * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::domain(format!(
                "a_t = {} is outside the identified set of a_e = {} with k = {}",
                self.a_t,
                self.a_e,
                spec.k()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubproblemSolution {
    pub rule: TreatmentRule,
    /// Set when `a_t = 0`: regret is identically zero and every rule is optimal.
    pub any_rule_optimal: bool,
}

/// Minimax rule of a one-dimensional subproblem: logistic in the t-statistic
/// with coefficient `min(a_e / sigma, tau*)`, sign following `a_t`.
pub fn subproblem_rule(sub: &SubproblemSpec, spec: &ProblemSpec) -> Result<SubproblemSolution> {
    sub.check_within(spec)?;
    if sub.a_t == 0.0 {
        return Ok(SubproblemSolution {
            rule: TreatmentRule::ConstantHalf,
            any_rule_optimal: true,
        });
    }
    if sub.a_e == 0.0 {
        return Ok(SubproblemSolution {
            rule: TreatmentRule::ConstantHalf,
            any_rule_optimal: false,
        });
    }
    let sigma = spec.sigma();
    let coeff = (sub.a_e / sigma).min(tau_star()?.tau_star);
    Ok(SubproblemSolution {
        rule: TreatmentRule::CustomLogistic {
            slope_over_sigma: coeff * sub.a_t.signum() / sigma,
        },
        any_rule_optimal: false,
    })
}
