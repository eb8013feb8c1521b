//! CDP action histories to per-position risk-aversion estimates.

mod moments;
mod positions;
mod records;
mod report;

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub use moments::{load_price_csv, rolling_moments, DailyMoment, MomentTable, PricePoint};
pub use positions::{group_by_cdp, position_series, PositionSeries, PositionSnapshot};
pub use records::{
    clean_filter, load_cdp_csv, parse_cdp_csv, Action, AddressType, CdpActionRecord,
};
pub use report::{
    histogram, rho_report, write_histogram_csv, write_per_address_csv, write_per_cdp_csv,
    write_snapshots_csv, AddressRho, CdpRho, HistogramBin, RhoReport, RhoReportConfig,
    SnapshotPolicy, SnapshotRho,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("missing CSV columns: {}", .0.join(", "))]
    Header(Vec<String>),
    #[error("{} malformed row(s): {}", .0.len(), join(.0))]
    Rows(Vec<RowError>),
    #[error("cdp {cdp_id}: {action} before open")]
    BeforeOpen { cdp_id: String, action: Action },
    #[error("cdp {cdp_id}: {action} after shut")]
    AfterShut { cdp_id: String, action: Action },
    #[error("cdp {cdp_id}: open repeated")]
    Reopened { cdp_id: String },
    #[error("cdp {cdp_id}: running collateral negative ({collateral}) at t = {timestamp}")]
    NegativeCollateral {
        cdp_id: String,
        timestamp: i64,
        collateral: f64,
    },
    #[error("cdp {cdp_id}: running debt negative ({debt}) at t = {timestamp}")]
    NegativeDebt {
        cdp_id: String,
        timestamp: i64,
        debt: f64,
    },
    #[error("position has no records")]
    EmptyPosition,
    #[error("price dates must be strictly increasing; {0} repeats or goes backwards")]
    UnorderedPrices(String),
    #[error("records mix cdp ids {0} and {1}")]
    MixedCdp(String, String),
    #[error("need at least 2 prices, got {0}")]
    TooFewPrices(usize),
    #[error("price {0} is not positive")]
    NonPositivePrice(f64),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

fn join(rows: &[RowError]) -> String {
    rows.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("; ")
}
