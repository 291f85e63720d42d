//! Side-by-side tables of the mean-square and mean-regret minimax rules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibration::ProblemSpec;
use crate::error::{Error, Result};
use crate::numerics::linspace;
use crate::rules::{mean_regret_rule, msr_optimal_rule, TreatmentRule};

/// Half-width of the identified set, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KValue {
    Finite(f64),
    #[serde(with = "inf_literal")]
    Infinite,
}

mod inf_literal {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("inf")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "inf" {
            Ok(())
        } else {
            Err(D::Error::custom(format!("expected \"inf\", got {s:?}")))
        }
    }
}

impl FromStr for KValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(KValue::Infinite);
        }
        let k: f64 = t.parse().map_err(|_| Error::domain(format!("k must be a number or \"inf\", got {s:?}")))?;
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::domain(format!("k must be finite and non-negative or \"inf\", got {s:?}")));
        }
        Ok(KValue::Finite(k))
    }
}

impl fmt::Display for KValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KValue::Finite(k) => write!(f, "{k}"),
            KValue::Infinite => f.write_str("inf"),
        }
    }
}

/// Default panels. Chosen to straddle the mean-regret switch at
/// `sqrt(pi/2) ~ 1.2533`; not taken from any published figure.
pub const DEFAULT_K_LIST: [KValue; 6] = [
    KValue::Finite(0.0),
    KValue::Finite(0.5),
    KValue::Finite(1.0),
    KValue::Finite(1.2533),
    KValue::Finite(2.0),
    KValue::Infinite,
];

pub const DEFAULT_Z_MIN: f64 = -4.0;
pub const DEFAULT_Z_MAX: f64 = 4.0;
pub const DEFAULT_Z_POINTS: usize = 401;

pub fn default_z_grid() -> Vec<f64> {
    linspace(DEFAULT_Z_MIN, DEFAULT_Z_MAX, DEFAULT_Z_POINTS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigureRow {
    pub z: f64,
    pub msr_rule: f64,
    pub mean_regret_rule: f64,
}

pub const FIGURE_CSV_HEADER: &str = "z,msr_rule,mean_regret_rule";

/// The two minimax rules for a given `k`; both are the constant rule when
/// `k` is unbounded.
pub fn rule_pair(k: KValue, sigma: f64) -> Result<(TreatmentRule, TreatmentRule)> {
    match k {
        KValue::Infinite => {
            ProblemSpec::new(0.0, sigma)?;
            Ok((TreatmentRule::ConstantHalf, TreatmentRule::ConstantHalf))
        }
        KValue::Finite(k) => {
            let spec = ProblemSpec::new(k, sigma)?;
            Ok((msr_optimal_rule(&spec)?, mean_regret_rule(&spec)))
        }
    }
}

/// Both rules evaluated at each observation in `z`.
pub fn figure1_panel(k: KValue, sigma: f64, z: &[f64]) -> Result<Vec<FigureRow>> {
    let (msr, mr) = rule_pair(k, sigma)?;
    z.iter()
        .map(|&z| {
            Ok(FigureRow {
                z,
                msr_rule: msr.evaluate(z)?,
                mean_regret_rule: mr.evaluate(z)?,
            })
        })
        .collect()
}
