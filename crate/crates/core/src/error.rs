use thiserror::Error;

use crate::params::ValidationError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {}", join_violations(.0))]
    Invalid(Vec<ValidationError>),

    #[error("sample count must be at least 1")]
    EmptySampleSet,

    #[error("exhaustive enumeration requires a finite-support return model")]
    NotEnumerable,

    #[error("payoff is not finite for sample {index} (R = {sample})")]
    NonFinitePayoff { index: usize, sample: f64 },

    #[error("utility domain violated: {0}")]
    UtilityDomain(String),

    #[error("decision grid is empty: {0}")]
    EmptyGrid(&'static str),

    #[error("collateral must be positive, got {0}")]
    NonPositiveCollateral(f64),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("zeta >= 0.5 hands the interest-rate decision to the attack group; only zeta < 0.5 is solved")]
    AttackGroupControlsRate,

    #[error("centralized welfare is {0}, the price-of-anarchy ratio is undefined")]
    UndefinedWelfareRatio(f64),

    #[error("no feasible collusion assignment exists for any interest rate")]
    InfeasibleCollusion,

    #[error("GOV price must be positive to convert holdings into token shares, got {0}")]
    NonPositiveGovPrice(f64),

    #[error("STBL price is zero while the holder allocates {0} to STBL")]
    ZeroStablecoinPrice(f64),

    #[error("marginal utility vanishes at w = {0}")]
    FlatUtility(f64),

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{0}")]
    Estimation(String),

    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
}

fn join_violations(v: &[ValidationError]) -> String {
    v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}
