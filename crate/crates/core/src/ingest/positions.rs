use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::records::{Action, CdpActionRecord};
use super::IngestError;

/// Debt below this many stablecoin units counts as fully repaid.
const DEBT_DUST: f64 = 1e-9;

/// Position state right after one action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionSnapshot {
    pub timestamp: i64,
    pub eth_usd: f64,
    /// ETH locked in the CDP.
    pub collateral_eth: f64,
    /// ETH bought with drawn stablecoins.
    pub purchased_eth: f64,
    /// Drawn stablecoins held as cash (reinvestment off).
    pub cash: f64,
    pub debt: f64,
    /// `(collateral + purchased) * price + cash - debt`, dollars.
    pub wealth: f64,
    /// `(collateral + purchased) / collateral`.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionSeries {
    pub cdp_id: String,
    pub address: String,
    pub action_count: usize,
    /// One entry per action that leaves positive collateral.
    pub snapshots: Vec<PositionSnapshot>,
}

/// Splits time-sorted records by CDP, ordered by CDP id.
pub fn group_by_cdp(records: &[CdpActionRecord]) -> Vec<Vec<CdpActionRecord>> {
    let mut groups: BTreeMap<&str, Vec<CdpActionRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(&r.cdp_id).or_default().push(r.clone());
    }
    groups.into_values().collect()
}

/// Replays one CDP's actions. With `assume_reinvest`, every draw buys ETH at
/// the action price and every wipe sells purchased ETH to repay; repaying the
/// last of the debt unwinds the purchased ETH entirely.
pub fn position_series(
    records: &[CdpActionRecord],
    assume_reinvest: bool,
) -> Result<PositionSeries, IngestError> {
    let first = records
        .first()
        .ok_or(IngestError::EmptyPosition)?;
    let cdp_id = first.cdp_id.clone();
    let mut opened = false;
    let mut shut = false;
    let (mut c, mut p, mut cash, mut d) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut snapshots = Vec::with_capacity(records.len());

    for r in records {
        if r.cdp_id != cdp_id {
            return Err(IngestError::MixedCdp(cdp_id, r.cdp_id.clone()));
        }
        if shut {
            return Err(IngestError::AfterShut {
                cdp_id,
                action: r.action,
            });
        }
        match r.action {
            Action::Open if opened => return Err(IngestError::Reopened { cdp_id }),
            Action::Open => opened = true,
            a if !opened => return Err(IngestError::BeforeOpen { cdp_id, action: a }),
            _ => {}
        }
        let price = r.eth_usd;
        c += r.collateral_delta;
        if r.debt_delta > 0.0 {
            d += r.debt_delta;
            if assume_reinvest {
                p += r.debt_delta / price;
            } else {
                cash += r.debt_delta;
            }
        } else if r.debt_delta < 0.0 {
            let repaid = -r.debt_delta;
            d -= repaid;
            if r.action == Action::Wipe {
                if assume_reinvest {
                    p = (p - repaid / price).max(0.0);
                } else {
                    cash -= repaid;
                }
            }
        }
        if r.action == Action::Shut {
            shut = true;
            c = 0.0;
            d = 0.0;
        }
        if d.abs() <= DEBT_DUST {
            d = 0.0;
            p = 0.0;
            cash = 0.0;
        }
        if c < 0.0 {
            return Err(IngestError::NegativeCollateral {
                cdp_id,
                timestamp: r.timestamp,
                collateral: c,
            });
        }
        if d < 0.0 {
            return Err(IngestError::NegativeDebt {
                cdp_id,
                timestamp: r.timestamp,
                debt: d,
            });
        }
        if c > 0.0 {
            let eth = c + p;
            snapshots.push(PositionSnapshot {
                timestamp: r.timestamp,
                eth_usd: price,
                collateral_eth: c,
                purchased_eth: p,
                cash,
                debt: d,
                wealth: eth * price + cash - d,
                alpha: eth / c,
            });
        }
    }
    Ok(PositionSeries {
        cdp_id,
        address: first.address.clone(),
        action_count: records.len(),
        snapshots,
    })
}
