use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::moments::MomentTable;
use super::positions::PositionSeries;
use super::IngestError;
use crate::estimation::estimate_rho_m1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotPolicy {
    /// Estimate after every action, then average per CDP.
    #[default]
    PerAction,
    /// Estimate once, on the last snapshot of each CDP.
    FinalState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RhoReportConfig {
    pub r_free_annual: f64,
    pub days_per_year: f64,
    /// Addresses with more actions than this are active.
    pub active_threshold: usize,
    pub policy: SnapshotPolicy,
}

impl Default for RhoReportConfig {
    fn default() -> Self {
        RhoReportConfig {
            r_free_annual: 0.02,
            days_per_year: 365.0,
            active_threshold: 10,
            policy: SnapshotPolicy::PerAction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRho {
    pub cdp_id: String,
    pub address: String,
    pub timestamp: i64,
    pub w: f64,
    pub alpha: f64,
    pub er: f64,
    pub var_r: f64,
    pub r_free: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdpRho {
    pub cdp_id: String,
    pub address: String,
    pub snapshots: usize,
    pub actions: usize,
    pub mean_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddressRho {
    pub address: String,
    pub cdps: usize,
    pub actions: usize,
    pub mean_rho: f64,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RhoReport {
    pub snapshots: Vec<SnapshotRho>,
    pub per_cdp: Vec<CdpRho>,
    pub per_address: Vec<AddressRho>,
    /// Snapshots dated before the first return day.
    pub skipped_uncovered: usize,
    /// Snapshots whose return variance is zero or undefined.
    pub skipped_zero_variance: usize,
    /// Snapshots rejected by the estimator, e.g. non-positive wealth.
    pub skipped_invalid: usize,
}

impl RhoReport {
    pub fn active_addresses(&self) -> impl Iterator<Item = &AddressRho> {
        self.per_address.iter().filter(|a| a.active)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn rho_report(positions: &[PositionSeries], moments: &MomentTable, cfg: &RhoReportConfig) -> RhoReport {
    let r_free = cfg.r_free_annual / cfg.days_per_year;
    let mut report = RhoReport::default();
    let mut by_address: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();

    for pos in positions {
        let chosen = match cfg.policy {
            SnapshotPolicy::PerAction => &pos.snapshots[..],
            SnapshotPolicy::FinalState => {
                let n = pos.snapshots.len();
                &pos.snapshots[n.saturating_sub(1)..]
            }
        };
        let mut rhos = Vec::with_capacity(chosen.len());
        for snap in chosen {
            let Some(m) = moments.at_timestamp(snap.timestamp) else {
                report.skipped_uncovered += 1;
                continue;
            };
            let var_r = match m.variance {
                Some(v) if v > 0.0 => v,
                _ => {
                    report.skipped_zero_variance += 1;
                    continue;
                }
            };
            match estimate_rho_m1(snap.wealth, snap.alpha, m.mean, var_r, r_free) {
                Ok(e) => {
                    rhos.push(e.rho);
                    report.snapshots.push(SnapshotRho {
                        cdp_id: pos.cdp_id.clone(),
                        address: pos.address.clone(),
                        timestamp: snap.timestamp,
                        w: snap.wealth,
                        alpha: snap.alpha,
                        er: m.mean,
                        var_r,
                        r_free,
                        rho: e.rho,
                    });
                }
                Err(_) => report.skipped_invalid += 1,
            }
        }
        let entry = by_address.entry(&pos.address).or_default();
        entry.1 += pos.action_count;
        if rhos.is_empty() {
            continue;
        }
        let cdp_mean = mean(&rhos);
        entry.0.push(cdp_mean);
        report.per_cdp.push(CdpRho {
            cdp_id: pos.cdp_id.clone(),
            address: pos.address.clone(),
            snapshots: rhos.len(),
            actions: pos.action_count,
            mean_rho: cdp_mean,
        });
    }

    for (address, (cdp_means, actions)) in by_address {
        if cdp_means.is_empty() {
            continue;
        }
        report.per_address.push(AddressRho {
            address: address.to_string(),
            cdps: cdp_means.len(),
            actions,
            mean_rho: mean(&cdp_means),
            active: actions > cfg.active_threshold,
        });
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Equal-width bins over `[0, cap]`; values outside are left out. The last
/// bin is closed on the right.
pub fn histogram(values: &[f64], bins: usize, cap: f64) -> Vec<HistogramBin> {
    if bins == 0 || !(cap > 0.0) {
        return Vec::new();
    }
    let width = cap / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lower: cap * i as f64 / bins as f64,
            upper: cap * (i + 1) as f64 / bins as f64,
            count: 0,
        })
        .collect();
    for &v in values {
        if !(0.0..=cap).contains(&v) {
            continue;
        }
        let i = ((v / width) as usize).min(bins - 1);
        out[i].count += 1;
    }
    out
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Echoes estimator inputs so each row can be recomputed.
pub fn write_snapshots_csv<W: Write>(out: W, report: &RhoReport) -> Result<(), IngestError> {
    write_rows(out, &report.snapshots)
}

pub fn write_per_cdp_csv<W: Write>(out: W, report: &RhoReport) -> Result<(), IngestError> {
    write_rows(out, &report.per_cdp)
}

pub fn write_per_address_csv<W: Write>(out: W, report: &RhoReport) -> Result<(), IngestError> {
    write_rows(out, &report.per_address)
}

pub fn write_histogram_csv<W: Write>(out: W, bins: &[HistogramBin]) -> Result<(), IngestError> {
    write_rows(out, bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{PositionSnapshot, PricePoint};
    use chrono::NaiveDate;

    fn table() -> MomentTable {
        let d = |day| NaiveDate::from_ymd_opt(2018, 3, day).unwrap();
        MomentTable::from_prices(&[
            PricePoint { date: d(1), close: 100.0 },
            PricePoint { date: d(2), close: 110.0 },
            PricePoint { date: d(3), close: 99.0 },
            PricePoint { date: d(4), close: 108.9 },
        ])
        .unwrap()
    }

    fn at(day: u32) -> i64 {
        NaiveDate::from_ymd_opt(2018, 3, day)
            .unwrap()
            .and_hms_opt(6, 0, 0)
            .unwrap()
            .and_utc()
            .timestamp()
    }

    fn snap(t: i64, wealth: f64, alpha: f64) -> PositionSnapshot {
        PositionSnapshot {
            timestamp: t,
            eth_usd: 100.0,
            collateral_eth: 1.0,
            purchased_eth: alpha - 1.0,
            cash: 0.0,
            debt: 0.0,
            wealth,
            alpha,
        }
    }

    fn series(id: &str, address: &str, actions: usize, snaps: Vec<PositionSnapshot>) -> PositionSeries {
        PositionSeries {
            cdp_id: id.into(),
            address: address.into(),
            action_count: actions,
            snapshots: snaps,
        }
    }

    #[test]
    fn skips_and_echoes() {
        let ps = [series(
            "1",
            "a",
            3,
            vec![snap(at(1), 100.0, 1.0), snap(at(2), 100.0, 1.0), snap(at(3), 100.0, 1.5)],
        )];
        let r = rho_report(&ps, &table(), &RhoReportConfig::default());
        assert_eq!(r.skipped_uncovered, 1);
        assert_eq!(r.skipped_zero_variance, 1);
        assert_eq!(r.snapshots.len(), 1);
        let s = &r.snapshots[0];
        let again = estimate_rho_m1(s.w, s.alpha, s.er, s.var_r, s.r_free).unwrap().rho;
        assert_eq!(again, s.rho);
        assert_eq!(s.r_free, 0.02 / 365.0);
    }

    #[test]
    fn address_mean_is_unweighted_over_cdps() {
        let t = table();
        let ps = [
            series("1", "a", 2, vec![snap(at(3), 100.0, 1.0)]),
            series("2", "a", 12, vec![snap(at(3), 50.0, 1.0), snap(at(4), 50.0, 1.0)]),
            series("3", "b", 3, vec![snap(at(4), 10.0, 2.0)]),
        ];
        let r = rho_report(&ps, &t, &RhoReportConfig::default());
        assert_eq!(r.per_cdp.len(), 3);
        let a = &r.per_address[0];
        assert_eq!(a.address, "a");
        assert_eq!(a.cdps, 2);
        assert_eq!(a.mean_rho, (r.per_cdp[0].mean_rho + r.per_cdp[1].mean_rho) / 2.0);
        assert!(a.active);
        assert!(!r.per_address[1].active);
        assert_eq!(r.active_addresses().count(), 1);
    }

    #[test]
    fn final_state_policy() {
        let ps = [series("1", "a", 2, vec![snap(at(3), 100.0, 1.0), snap(at(4), 10.0, 1.0)])];
        let cfg = RhoReportConfig {
            policy: SnapshotPolicy::FinalState,
            ..Default::default()
        };
        let r = rho_report(&ps, &table(), &cfg);
        assert_eq!(r.snapshots.len(), 1);
        assert_eq!(r.snapshots[0].timestamp, at(4));
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[0.0, 0.25, 0.5, 1.0, 1.5, -0.1], 2, 1.0);
        assert_eq!(h.len(), 2);
        assert_eq!(h[0].count, 2);
        assert_eq!(h[1].count, 2);
    }
}
