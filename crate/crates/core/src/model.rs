//! Collateral return distributions and holder preferences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::hara_utility;
use crate::params::{Checker, ValidationError};

/// Distribution of the collateral return `R` over one model period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReturnModel {
    Deterministic {
        value: f64,
    },
    /// Finite support; the two-outcome case is the common one.
    #[serde(rename = "discrete", alias = "two-point")]
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    /// `1 + R = exp(X)` with `X ~ Normal(log_mean, log_sd)`.
    Lognormal { log_mean: f64, log_sd: f64 },
}

const PROB_SUM_TOL: f64 = 1e-9;

impl ReturnModel {
    pub fn two_point(lo: f64, p_lo: f64, hi: f64, p_hi: f64) -> Self {
        ReturnModel::Discrete {
            values: vec![lo, hi],
            probs: vec![p_lo, p_hi],
        }
    }

    pub fn violations(&self) -> Vec<ValidationError> {
        let mut c = Checker::default();
        match self {
            ReturnModel::Deterministic { value } => c.rate("returns.value", *value),
            ReturnModel::Discrete { values, probs } => {
                if values.is_empty() {
                    c.push("returns.values", "must not be empty");
                }
                if values.len() != probs.len() {
                    c.push("returns.probs", "must have one entry per value");
                }
                for &v in values {
                    c.rate("returns.values", v);
                }
                let mut all_finite = true;
                for &p in probs {
                    if !c.finite("returns.probs", p) {
                        all_finite = false;
                    } else if p < 0.0 {
                        c.push("returns.probs", "must be >= 0");
                    }
                }
                let total: f64 = probs.iter().sum();
                if all_finite && (total - 1.0).abs() > PROB_SUM_TOL {
                    c.push("probabilities", "must sum to 1");
                }
            }
            ReturnModel::Lognormal { log_mean, log_sd } => {
                c.finite("returns.log_mean", *log_mean);
                c.non_negative("returns.log_sd", *log_sd);
            }
        }
        c.errors
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    /// Outcomes and probabilities when the support is finite.
    pub fn support(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            ReturnModel::Deterministic { value } => Some((vec![*value], vec![1.0])),
            ReturnModel::Discrete { values, probs } => Some((values.clone(), probs.clone())),
            ReturnModel::Lognormal { .. } => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ReturnModel::Deterministic { value } => *value,
            ReturnModel::Discrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v * p).sum()
            }
            ReturnModel::Lognormal { log_mean, log_sd } => {
                (log_mean + 0.5 * log_sd * log_sd).exp() - 1.0
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ReturnModel::Deterministic { .. } => 0.0,
            ReturnModel::Discrete { values, probs } => {
                let m = self.mean();
                values
                    .iter()
                    .zip(probs)
                    .map(|(v, p)| p * (v - m) * (v - m))
                    .sum()
            }
            ReturnModel::Lognormal { log_mean, log_sd } => {
                let s2 = log_sd * log_sd;
                (s2.exp() - 1.0) * (2.0 * log_mean + s2).exp()
            }
        }
    }
}

/// Stablecoin-holder preferences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum UtilityFunction {
    RiskNeutral,
    /// `u(w) = -exp(-rho w)`.
    Cara { rho: f64 },
    /// `mean - rho * variance / 2` of the payoff distribution.
    MeanVariance { rho: f64 },
    /// Hyperbolic absolute risk aversion with scale `a`, shift `b` and exponent `gamma`.
    Hara { a: f64, b: f64, gamma: f64 },
}

impl Default for UtilityFunction {
    fn default() -> Self {
        UtilityFunction::RiskNeutral
    }
}

impl UtilityFunction {
    pub fn violations(&self) -> Vec<ValidationError> {
        let mut c = Checker::default();
        match *self {
            UtilityFunction::RiskNeutral => {}
            UtilityFunction::Cara { rho } | UtilityFunction::MeanVariance { rho } => {
                c.positive("utility.rho", rho)
            }
            UtilityFunction::Hara { a, b, gamma } => {
                c.positive("utility.a", a);
                if c.finite("utility.gamma", gamma) && (gamma == 0.0 || gamma == 1.0) {
                    c.push("utility.gamma", "must differ from 0 and 1");
                }
                // domain at w = 0 reduces to b > 0
                if c.finite("utility.b", b) && b <= 0.0 {
                    c.push("utility.b", "must be > 0 so the HARA domain contains w = 0");
                }
            }
        }
        c.errors
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    /// Pointwise utility. Mean-variance preferences evaluate through their
    /// exponential (CARA) representation.
    pub fn eval(&self, w: f64) -> Result<f64> {
        match *self {
            UtilityFunction::RiskNeutral => Ok(w),
            UtilityFunction::Cara { rho } | UtilityFunction::MeanVariance { rho } => {
                Ok(-(-rho * w).exp())
            }
            UtilityFunction::Hara { a, b, gamma } => hara_utility(w, a, b, gamma),
        }
    }

    /// `u(w + dx) - u(w)` computed without cancellation.
    pub(crate) fn increment(&self, w: f64, dx: f64) -> Result<f64> {
        match *self {
            UtilityFunction::RiskNeutral => Ok(dx),
            UtilityFunction::Cara { rho } | UtilityFunction::MeanVariance { rho } => {
                Ok(-(-rho * w).exp() * (-rho * dx).exp_m1())
            }
            UtilityFunction::Hara { a, b, gamma } => {
                let z = a * w / (1.0 - gamma) + b;
                let z_shift = a * (w + dx) / (1.0 - gamma) + b;
                if !(z > 0.0 && z_shift > 0.0) || gamma == 0.0 {
                    return Err(Error::UtilityDomain(format!(
                        "HARA requires a*w/(1-gamma) + b > 0 on [{w}, {}]",
                        w + dx
                    )));
                }
                let rel = a * dx / ((1.0 - gamma) * z);
                Ok((1.0 - gamma) / gamma * z.powf(gamma) * (gamma * rel.ln_1p()).exp_m1())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probabilities_must_sum_to_one() {
        let m = ReturnModel::two_point(-0.5, 0.6, 0.5, 0.5);
        let errs = m.violations();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].to_string(), "probabilities must sum to 1");
    }

    #[test]
    fn total_loss_outcome_is_rejected() {
        let m = ReturnModel::Deterministic { value: -1.0 };
        assert!(m.validate().is_err());
    }

    #[test]
    fn analytic_moments() {
        let m = ReturnModel::two_point(-0.5, 0.5, 0.5, 0.5);
        assert_eq!(m.mean(), 0.0);
        assert_eq!(m.variance(), 0.25);
        let ln = ReturnModel::Lognormal {
            log_mean: 0.0,
            log_sd: 0.0,
        };
        assert_eq!(ln.mean(), 0.0);
        assert_eq!(ln.variance(), 0.0);
    }

    #[test]
    fn hara_parameters_are_checked() {
        assert!(UtilityFunction::Hara {
            a: 1.0,
            b: 1.0,
            gamma: 0.5
        }
        .validate()
        .is_ok());
        assert!(UtilityFunction::Hara {
            a: 1.0,
            b: 1.0,
            gamma: 0.0
        }
        .validate()
        .is_err());
        assert!(UtilityFunction::Hara {
            a: 1.0,
            b: 0.0,
            gamma: 0.5
        }
        .validate()
        .is_err());
    }

    #[test]
    fn increments_match_direct_differences() {
        for u in [
            UtilityFunction::RiskNeutral,
            UtilityFunction::Cara { rho: 0.7 },
            UtilityFunction::Hara {
                a: 2.0,
                b: 1.0,
                gamma: -1.5,
            },
        ] {
            let direct = u.eval(1.3).unwrap() - u.eval(1.0).unwrap();
            let inc = u.increment(1.0, 0.3).unwrap();
            assert!((direct - inc).abs() < 1e-12, "{u:?}: {direct} vs {inc}");
        }
    }

    #[test]
    fn tagged_config_form() {
        let m: ReturnModel =
            toml::from_str("kind = \"two-point\"\nvalues = [-0.5, 0.5]\nprobs = [0.5, 0.5]")
                .unwrap();
        assert_eq!(m, ReturnModel::two_point(-0.5, 0.5, 0.5, 0.5));
        let u: UtilityFunction = toml::from_str("kind = \"mean-variance\"\nrho = 2.0").unwrap();
        assert_eq!(u, UtilityFunction::MeanVariance { rho: 2.0 });
    }
}
