//! Game-theoretic capital-structure models for non-custodial stablecoins.
//!
//! Four solvers share one sampling layer: a governance/vault Stackelberg game,
//! the same game with a governance attack, a three-agent collusion game, and
//! a miner-absorbed issuance simulator. The [`estimation`] and [`ingest`]
//! modules recover holder risk aversion from CDP action histories.

pub mod error;
pub mod estimation;
pub mod exec;
pub mod grid;
pub mod ingest;
pub mod model;
pub mod options;
pub mod p1;
pub mod p2;
pub mod p3;
pub mod p4;
pub mod params;
pub mod report;
pub mod stochastics;

pub use error::{Error, Result};
pub use exec::ExecMode;
pub use grid::GridConfig;
pub use model::{ReturnModel, UtilityFunction};
pub use options::{SolverOptions, Timing};
pub use params::{ScenarioParams, ValidationError};
pub use report::EquilibriumReport;
pub use stochastics::{SampleSet, SamplingConfig, SamplingMode};
