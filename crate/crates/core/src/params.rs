//! Scenario parameters shared by every solver.
//!
//! Config keys carry their unit: `_frac` for fractions in [0, 1], `_usd` for
//! dollar amounts, `_rate` for per-period rates.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioParams {
    /// Collateral factor: maximum face value issued per dollar locked.
    #[serde(rename = "beta_frac")]
    pub beta: f64,
    /// Terminal GOV valuation.
    #[serde(rename = "kappa_usd")]
    pub kappa: f64,
    /// Return on the opportunity financed by issuance.
    #[serde(rename = "b_rate")]
    pub b: f64,
    /// Vault outside-opportunity utility.
    #[serde(rename = "u_usd")]
    pub u: f64,
    /// Stablecoin holder (or miner) outside utility.
    #[serde(rename = "u_holder_usd")]
    pub u_holder: f64,
    /// GOV share needed to attack.
    #[serde(rename = "zeta_frac")]
    pub zeta: f64,
    /// Fraction of locked collateral an attack can take; may exceed 1.
    #[serde(rename = "gamma_frac")]
    pub gamma: f64,
    /// Outside cost of attacking.
    #[serde(rename = "alpha_usd")]
    pub alpha: f64,
    /// GOV share held by outside governors.
    #[serde(rename = "epsilon_frac")]
    pub epsilon: f64,
    /// Collateral available to the vault.
    #[serde(rename = "n_bar_usd")]
    pub n_bar: f64,
    #[serde(rename = "x_bar_usd")]
    pub x_bar: f64,
    #[serde(rename = "y_bar_usd")]
    pub y_bar: f64,
    /// Discount factor linking terminal value to fee flow.
    #[serde(rename = "r_discount_frac")]
    pub r_discount: f64,
    /// Block production cost.
    #[serde(rename = "c_usd")]
    pub c: f64,
    /// STBL acquisition cost.
    #[serde(rename = "delta_cost_frac")]
    pub delta_cost: f64,
    #[serde(rename = "r_free_rate")]
    pub r_free: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            beta: 0.66,
            kappa: 0.0,
            b: 0.1,
            u: 0.0,
            u_holder: 0.0,
            zeta: 0.1,
            gamma: 1.0,
            alpha: 0.0,
            epsilon: 0.0,
            n_bar: 100.0,
            x_bar: 100.0,
            y_bar: 100.0,
            r_discount: 0.05,
            c: 1.0,
            delta_cost: 0.0,
            r_free: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.message)
    }
}

/// Collects violations for one record; every check runs even after a failure.
#[derive(Default)]
pub(crate) struct Checker {
    pub(crate) errors: Vec<ValidationError>,
}

impl Checker {
    pub(crate) fn finite(&mut self, field: &str, v: f64) -> bool {
        if v.is_finite() {
            true
        } else {
            self.errors.push(ValidationError::new(field, "must be finite"));
            false
        }
    }

    pub(crate) fn positive(&mut self, field: &str, v: f64) {
        if self.finite(field, v) && v <= 0.0 {
            self.errors.push(ValidationError::new(field, "must be > 0"));
        }
    }

    pub(crate) fn non_negative(&mut self, field: &str, v: f64) {
        if self.finite(field, v) && v < 0.0 {
            self.errors.push(ValidationError::new(field, "must be >= 0"));
        }
    }

    pub(crate) fn open_unit(&mut self, field: &str, v: f64) {
        if self.finite(field, v) && !(v > 0.0 && v < 1.0) {
            self.errors.push(ValidationError::new(field, "must lie in (0, 1)"));
        }
    }

    pub(crate) fn half_open_unit(&mut self, field: &str, v: f64) {
        if self.finite(field, v) && !(0.0..1.0).contains(&v) {
            self.errors.push(ValidationError::new(field, "must lie in [0, 1)"));
        }
    }

    pub(crate) fn rate(&mut self, field: &str, v: f64) {
        if self.finite(field, v) && v <= -1.0 {
            self.errors.push(ValidationError::new(field, "must be > -1"));
        }
    }

    pub(crate) fn push(&mut self, field: &str, message: &str) {
        self.errors.push(ValidationError::new(field, message));
    }
}

impl ScenarioParams {
    /// Every violated invariant, in field order.
    pub fn violations(&self) -> Vec<ValidationError> {
        let mut c = Checker::default();
        if c.finite("beta", self.beta) {
            if self.beta <= 0.0 {
                c.push("beta", "must be > 0");
            } else if self.beta > 1.0 {
                c.push("beta", "must be <= 1");
            }
        }
        c.non_negative("kappa", self.kappa);
        c.rate("b", self.b);
        c.non_negative("u", self.u);
        c.non_negative("u_holder", self.u_holder);
        c.open_unit("zeta", self.zeta);
        c.non_negative("gamma", self.gamma);
        c.non_negative("alpha", self.alpha);
        c.half_open_unit("epsilon", self.epsilon);
        c.non_negative("n_bar", self.n_bar);
        c.non_negative("x_bar", self.x_bar);
        c.non_negative("y_bar", self.y_bar);
        c.open_unit("r_discount", self.r_discount);
        c.non_negative("c", self.c);
        c.half_open_unit("delta_cost", self.delta_cost);
        c.rate("r_free", self.r_free);
        c.errors
    }

    /// Returns the parameters unchanged when every invariant holds.
    pub fn validate(self) -> Result<Self, Vec<ValidationError>> {
        let v = self.violations();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(v)
        }
    }
}
