//! Solver output serialized as JSON.
//!
//! Field order in the JSON document follows declaration order below.

use serde::{Deserialize, Serialize};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    CapitalStructure,
    GovernanceAttack,
    CollusionPortfolio,
}

/// GOV valuations at model times 0, 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GovTokenPath {
    /// Governance objective value at time 0 (undiscounted).
    pub p0: f64,
    pub p1: f64,
    /// Terminal value conditional on no attack: `delta F + kappa`.
    pub p2: f64,
    /// Terminal value averaged over outcomes, zero on attacked ones.
    pub p2_expected: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub probability: f64,
    /// One-hot collusion outcome; only set by the collusion model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_n: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_v: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_s: Option<u8>,
}

impl AttackSummary {
    pub fn none() -> Self {
        AttackSummary {
            probability: 0.0,
            d_n: None,
            d_v: None,
            d_s: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bribes {
    pub gamma_v: f64,
    pub gamma_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Portfolios {
    pub x_c: f64,
    pub x_g: f64,
    pub y_c: f64,
    pub y_g: f64,
    pub y_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    pub governance: f64,
    pub vault: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holder: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdErrors {
    pub governance: f64,
    pub vault: f64,
    pub b_price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_length: Option<usize>,
    pub std_errors: StdErrors,
}

/// Everything needed to reproduce a report from its own header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub artifact_version: String,
    pub seed: u64,
    pub sample_count: usize,
    pub sampling_exact: bool,
    pub delta_grid_points: usize,
    pub f_grid_points: usize,
    pub n_grid_points: usize,
    pub timing: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub problem: Problem,
    pub run: RunHeader,
    pub delta_star: f64,
    pub f_star: f64,
    pub n_star: f64,
    pub b_price: f64,
    pub participates: bool,
    pub gov_path: GovTokenPath,
    pub attack: AttackSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bribes: Option<Bribes>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub portfolios: Option<Portfolios>,
    pub objectives: Objectives,
    pub diagnostics: Diagnostics,
}

impl EquilibriumReport {
    /// Total welfare: governance plus vault objective.
    pub fn welfare(&self) -> f64 {
        self.objectives.governance + self.objectives.vault
    }
}
