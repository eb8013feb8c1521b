//! Risk-aversion estimation from observed portfolio choices.
//!
//! Method 1 inverts the single-asset mean-variance optimum
//! `alpha w = (E[R] - r) / (rho Var(R))`. Method 2 inverts the multi-asset
//! weights `w = Sigma^-1 mu / (rho W Rf)` by scalar least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::UtilityFunction;

pub const DEFAULT_AP_STEP: f64 = 1e-4;

/// `((1 - gamma) / gamma) * (a w / (1 - gamma) + b)^gamma`.
pub fn hara_utility(w: f64, a: f64, b: f64, gamma: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::UtilityDomain(format!("HARA scale a must be > 0, got {a}")));
    }
    if gamma == 0.0 || gamma == 1.0 || !gamma.is_finite() {
        return Err(Error::UtilityDomain(format!(
            "HARA exponent must differ from 0 and 1, got {gamma}"
        )));
    }
    let z = a * w / (1.0 - gamma) + b;
    if !(z > 0.0) {
        return Err(Error::UtilityDomain(format!(
            "a*w/(1-gamma) + b = {z} at w = {w}, must be > 0"
        )));
    }
    Ok((1.0 - gamma) / gamma * z.powf(gamma))
}

/// `u(w + dx) - u(w)` up to a positive factor that depends on `w` only.
fn scaled_increment(u: &UtilityFunction, w: f64, dx: f64) -> Result<f64> {
    match *u {
        UtilityFunction::Cara { rho } | UtilityFunction::MeanVariance { rho } => {
            // exp(-rho w) factored out, so large w does not underflow
            Ok(-(-rho * dx).exp_m1())
        }
        _ => u.increment(w, dx),
    }
}

/// Absolute risk aversion `-u''(w) / u'(w)` by central differences.
pub fn arrow_pratt(u: &UtilityFunction, w: f64, step: f64) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Estimation(format!("finite-difference step must be > 0, got {step}")));
    }
    u.validate()?;
    let up = scaled_increment(u, w, step)?;
    let down = scaled_increment(u, w, -step)?;
    let d1 = (up - down) / (2.0 * step);
    let d2 = (up + down) / (step * step);
    if !(d1.abs() > f64::MIN_POSITIVE && d1.is_finite()) {
        return Err(Error::FlatUtility(w));
    }
    Ok(-d2 / d1)
}

/// `alpha* = (E[R] - r) / (rho Var(R) w)`.
pub fn optimal_alpha(w: f64, er: f64, var_r: f64, r_free: f64, rho: f64) -> Result<f64> {
    require_positive("wealth", w)?;
    require_positive("return variance", var_r)?;
    require_positive("rho", rho)?;
    Ok((er - r_free) / (rho * var_r * w))
}

/// `w [r + alpha (E[R] - r)] - rho w^2 alpha^2 Var(R) / 2`.
pub fn mean_variance_objective(w: f64, alpha: f64, er: f64, var_r: f64, r_free: f64, rho: f64) -> f64 {
    w * (r_free + alpha * (er - r_free)) - 0.5 * rho * w * w * alpha * alpha * var_r
}

fn require_positive(what: &'static str, x: f64) -> Result<()> {
    if x == 0.0 {
        Err(Error::DivisionByZero(what))
    } else if !(x > 0.0 && x.is_finite()) {
        Err(Error::Estimation(format!("{what} must be positive and finite, got {x}")))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Method1,
    Method2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum EstimationInputs {
    Method1 {
        w: f64,
        alpha: f64,
        er: f64,
        var_r: f64,
        r_free: f64,
    },
    Method2 {
        weights: Vec<f64>,
        wealth: f64,
        rf_product: f64,
        sigma: Vec<Vec<f64>>,
        mu_hat: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAversionEstimate {
    pub rho: f64,
    pub method: Method,
    /// Set when `rho <= 0`; such values are kept, not clipped.
    pub non_positive: bool,
    pub inputs: EstimationInputs,
    /// Norm of the least-squares misfit; only for multi-asset Method 2.
    pub residual: Option<f64>,
}

/// `rho = (E[R] - r) / (alpha w Var(R))`.
pub fn estimate_rho_m1(w: f64, alpha: f64, er: f64, var_r: f64, r_free: f64) -> Result<RiskAversionEstimate> {
    require_positive("wealth", w)?;
    require_positive("return variance", var_r)?;
    let denom = alpha * w * var_r;
    if denom == 0.0 {
        return Err(Error::DivisionByZero("alpha * w * Var(R)"));
    }
    let rho = (er - r_free) / denom;
    if !rho.is_finite() {
        return Err(Error::Estimation(format!("rho is not finite ({rho})")));
    }
    Ok(RiskAversionEstimate {
        rho,
        method: Method::Method1,
        non_positive: rho <= 0.0,
        inputs: EstimationInputs::Method1 {
            w,
            alpha,
            er,
            var_r,
            r_free,
        },
        residual: None,
    })
}

/// Multi-period weights `w* = Sigma^-1 mu / (rho W Rf)` solved for `rho`.
pub fn estimate_rho_m2(
    weights: &[f64],
    wealth: f64,
    rf_product: f64,
    sigma: &[Vec<f64>],
    mu_hat: &[f64],
) -> Result<RiskAversionEstimate> {
    let k = weights.len();
    if k == 0 || mu_hat.len() != k || sigma.len() != k || sigma.iter().any(|row| row.len() != k) {
        return Err(Error::Dimension(format!(
            "need k weights, k excess means and a k x k covariance (weights {k}, means {}, sigma {} rows)",
            mu_hat.len(),
            sigma.len()
        )));
    }
    if weights.iter().all(|&x| x == 0.0) {
        return Err(Error::Estimation("weights vector is zero".into()));
    }
    let scale = wealth * rf_product;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Estimation(format!(
            "wealth * rf_product must be positive, got {scale}"
        )));
    }
    let s = DMatrix::from_fn(k, k, |i, j| sigma[i][j]);
    let tol = 1e-12 * s.amax().max(1.0);
    for i in 0..k {
        for j in 0..i {
            if (s[(i, j)] - s[(j, i)]).abs() > tol {
                return Err(Error::NotPositiveDefinite);
            }
        }
    }
    let chol = s.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;

    let (rho, residual) = if k == 1 {
        (mu_hat[0] / (weights[0] * scale * sigma[0][0]), None)
    } else {
        let v = chol.solve(&DVector::from_column_slice(mu_hat));
        let w = DVector::from_column_slice(weights);
        let rho = w.dot(&v) / (scale * w.norm_squared());
        let misfit = &w * (scale * rho) - &v;
        (rho, Some(misfit.norm()))
    };
    if !rho.is_finite() {
        return Err(Error::Estimation(format!("rho is not finite ({rho})")));
    }
    Ok(RiskAversionEstimate {
        rho,
        method: Method::Method2,
        non_positive: rho <= 0.0,
        inputs: EstimationInputs::Method2 {
            weights: weights.to_vec(),
            wealth,
            rf_product,
            sigma: sigma.to_vec(),
            mu_hat: mu_hat.to_vec(),
        },
        residual,
    })
}
