use std::path::Path;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{IngestError, RowError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub close: f64,
}

/// Expanding-window moments of daily returns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyMoment {
    pub count: usize,
    pub mean: f64,
    /// Sample variance (n - 1 divisor); undefined for a single return.
    pub variance: Option<f64>,
}

/// Reads a `date,close` CSV with ISO dates.
pub fn load_price_csv(path: &Path) -> Result<Vec<PricePoint>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut points = Vec::new();
    let mut errors = Vec::new();
    for row in reader.deserialize::<PricePoint>() {
        match row {
            Ok(p) if p.close.is_finite() && p.close > 0.0 => points.push(p),
            Ok(p) => errors.push(RowError {
                line: points.len() as u64 + errors.len() as u64 + 2,
                message: format!("close must be positive, got {}", p.close),
            }),
            Err(e) => errors.push(RowError {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            }),
        }
    }
    if errors.is_empty() {
        Ok(points)
    } else {
        Err(IngestError::Rows(errors))
    }
}

/// Entry `t` covers returns `1..=t+1` of the series.
pub fn rolling_moments(prices: &[f64]) -> Result<Vec<DailyMoment>, IngestError> {
    if prices.len() < 2 {
        return Err(IngestError::TooFewPrices(prices.len()));
    }
    if let Some(&p) = prices.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(IngestError::NonPositivePrice(p));
    }
    let returns: Vec<f64> = prices.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    let mut out = Vec::with_capacity(returns.len());
    let mut sum = 0.0;
    for (i, &r) in returns.iter().enumerate() {
        sum += r;
        let n = i + 1;
        let mean = sum / n as f64;
        let variance = (n > 1).then(|| {
            let ss: f64 = returns[..n].iter().map(|x| (x - mean) * (x - mean)).sum();
            ss / (n - 1) as f64
        });
        out.push(DailyMoment {
            count: n,
            mean,
            variance,
        });
    }
    Ok(out)
}

/// Return-day moments indexed by calendar date.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    days: Vec<NaiveDate>,
    moments: Vec<DailyMoment>,
}

impl MomentTable {
    pub fn from_prices(points: &[PricePoint]) -> Result<MomentTable, IngestError> {
        for w in points.windows(2) {
            if w[1].date <= w[0].date {
                return Err(IngestError::UnorderedPrices(w[1].date.to_string()));
            }
        }
        let closes: Vec<f64> = points.iter().map(|p| p.close).collect();
        let moments = rolling_moments(&closes)?;
        Ok(MomentTable {
            days: points[1..].iter().map(|p| p.date).collect(),
            moments,
        })
    }

    pub fn days(&self) -> &[NaiveDate] {
        &self.days
    }

    pub fn moments(&self) -> &[DailyMoment] {
        &self.moments
    }

    /// Moments as of the UTC day of `timestamp`: the latest return day not after it.
    pub fn at_timestamp(&self, timestamp: i64) -> Option<&DailyMoment> {
        let day = DateTime::from_timestamp(timestamp, 0)?.date_naive();
        let idx = self.days.partition_point(|d| *d <= day);
        idx.checked_sub(1).map(|i| &self.moments[i])
    }
}
