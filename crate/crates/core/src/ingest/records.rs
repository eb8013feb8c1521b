use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IngestError, RowError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Open,
    Lock,
    Free,
    Draw,
    Wipe,
    Shut,
    Bite,
}

impl Action {
    fn parse(s: &str) -> Option<Action> {
        Some(match s {
            "open" => Action::Open,
            "lock" => Action::Lock,
            "free" => Action::Free,
            "draw" => Action::Draw,
            "wipe" => Action::Wipe,
            "shut" => Action::Shut,
            "bite" => Action::Bite,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Open => "open",
            Action::Lock => "lock",
            Action::Free => "free",
            Action::Draw => "draw",
            Action::Wipe => "wipe",
            Action::Shut => "shut",
            Action::Bite => "bite",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AddressType {
    Eoa,
    Contract,
}

/// One CDP action. Deltas are signed changes to the position: ETH for
/// collateral, stablecoin units for debt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdpActionRecord {
    pub timestamp: i64,
    pub cdp_id: String,
    pub address: String,
    pub action: Action,
    pub collateral_delta: f64,
    pub debt_delta: f64,
    pub eth_usd: f64,
    pub address_type: Option<AddressType>,
    /// 1-based line in the source file.
    pub line: u64,
}

#[derive(Debug, Deserialize)]
struct RawRow {
    timestamp: String,
    cdp_id: String,
    address: String,
    action: String,
    collateral_delta: String,
    debt_delta: String,
    eth_usd: String,
    #[serde(default)]
    address_type: Option<String>,
}

const REQUIRED: [&str; 7] = [
    "timestamp",
    "cdp_id",
    "address",
    "action",
    "collateral_delta",
    "debt_delta",
    "eth_usd",
];

pub fn load_cdp_csv(path: &Path) -> Result<Vec<CdpActionRecord>, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_cdp_csv(file)
}

/// Parses every row, collecting all row errors before failing. Output is
/// sorted by timestamp; equal timestamps keep file order.
pub fn parse_cdp_csv<R: Read>(input: R) -> Result<Vec<CdpActionRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    let missing: Vec<String> = REQUIRED
        .iter()
        .filter(|c| !headers.iter().any(|h| h == **c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(IngestError::Header(missing));
    }

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for row in reader.records() {
        let record = match row {
            Ok(record) => record,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let parsed = record
            .deserialize::<RawRow>(Some(&headers))
            .map_err(|e| e.to_string())
            .and_then(|raw| convert(raw, line));
        match parsed {
            Ok(r) => records.push(r),
            Err(message) => errors.push(RowError { line, message }),
        }
    }
    if !errors.is_empty() {
        return Err(IngestError::Rows(errors));
    }
    records.sort_by_key(|r| r.timestamp);
    Ok(records)
}

fn number(field: &str, s: &str) -> Result<f64, String> {
    let x: f64 = s
        .parse()
        .map_err(|_| format!("{field} is not a number: {s:?}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{field} is not finite"))
    }
}

fn convert(raw: RawRow, line: u64) -> Result<CdpActionRecord, String> {
    let timestamp: i64 = raw
        .timestamp
        .parse()
        .map_err(|_| format!("timestamp is not an integer: {:?}", raw.timestamp))?;
    let action =
        Action::parse(&raw.action).ok_or_else(|| format!("unknown action {:?}", raw.action))?;
    let collateral_delta = number("collateral_delta", &raw.collateral_delta)?;
    let debt_delta = number("debt_delta", &raw.debt_delta)?;
    let eth_usd = number("eth_usd", &raw.eth_usd)?;
    if eth_usd <= 0.0 {
        return Err(format!("eth_usd must be > 0, got {eth_usd}"));
    }
    let address_type = match raw.address_type.as_deref() {
        None | Some("") => None,
        Some("eoa") => Some(AddressType::Eoa),
        Some("contract") => Some(AddressType::Contract),
        Some(other) => return Err(format!("unknown address_type {other:?}")),
    };
    let sign_ok = match action {
        Action::Open => collateral_delta >= 0.0 && debt_delta >= 0.0,
        Action::Lock => collateral_delta >= 0.0 && debt_delta == 0.0,
        Action::Free => collateral_delta <= 0.0 && debt_delta == 0.0,
        Action::Draw => collateral_delta == 0.0 && debt_delta >= 0.0,
        Action::Wipe => collateral_delta == 0.0 && debt_delta <= 0.0,
        Action::Bite => collateral_delta <= 0.0 && debt_delta <= 0.0,
        Action::Shut => true,
    };
    if !sign_ok {
        return Err(format!(
            "{action} with collateral_delta {collateral_delta} and debt_delta {debt_delta} has the wrong sign"
        ));
    }
    Ok(CdpActionRecord {
        timestamp,
        cdp_id: raw.cdp_id,
        address: raw.address,
        action,
        collateral_delta,
        debt_delta,
        eth_usd,
        address_type,
        line,
    })
}

/// Drops records after `cutoff`, contract-owned rows when `eoa_only`, then
/// every CDP whose peak collateral value does not exceed `min_collateral_usd`.
pub fn clean_filter(
    records: &[CdpActionRecord],
    min_collateral_usd: f64,
    cutoff: Option<i64>,
    eoa_only: bool,
) -> Vec<CdpActionRecord> {
    let kept: Vec<&CdpActionRecord> = records
        .iter()
        .filter(|r| cutoff.is_none_or(|c| r.timestamp <= c))
        .filter(|r| !(eoa_only && r.address_type == Some(AddressType::Contract)))
        .collect();

    let mut running: HashMap<&str, f64> = HashMap::new();
    let mut peak: HashMap<&str, f64> = HashMap::new();
    for r in &kept {
        let c = running.entry(&r.cdp_id).or_insert(0.0);
        *c += r.collateral_delta;
        if r.action == Action::Shut {
            *c = 0.0;
        }
        let value = *c * r.eth_usd;
        let p = peak.entry(&r.cdp_id).or_insert(f64::NEG_INFINITY);
        *p = p.max(value);
    }
    kept.into_iter()
        .filter(|r| min_collateral_usd <= 0.0 || peak[r.cdp_id.as_str()] > min_collateral_usd)
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "timestamp,cdp_id,address,action,collateral_delta,debt_delta,eth_usd\n";

    #[test]
    fn three_rows_sorted() {
        let csv = format!(
            "{HEADER}30,1,a,draw,0,10,150\n10,1,a,open,0,0,150\n20,1,a,lock,1,0,150\n"
        );
        let r = parse_cdp_csv(csv.as_bytes()).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(
            r.iter().map(|x| x.timestamp).collect::<Vec<_>>(),
            vec![10, 20, 30]
        );
        assert_eq!(r[0].line, 3);
    }

    #[test]
    fn unknown_action_reports_line() {
        let csv = format!("{HEADER}10,1,a,open,0,0,150\n20,1,a,frob,1,0,150\n");
        match parse_cdp_csv(csv.as_bytes()) {
            Err(IngestError::Rows(rows)) => {
                assert_eq!(rows.len(), 1);
                assert_eq!(rows[0].line, 3);
                assert!(rows[0].message.contains("frob"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse_cdp_csv(HEADER.as_bytes()).unwrap().is_empty());
        assert!(matches!(
            parse_cdp_csv("timestamp,cdp_id\n".as_bytes()),
            Err(IngestError::Header(_))
        ));
    }

    fn rec(t: i64, cdp: &str, action: Action, dc: f64, price: f64) -> CdpActionRecord {
        CdpActionRecord {
            timestamp: t,
            cdp_id: cdp.into(),
            address: "a".into(),
            action,
            collateral_delta: dc,
            debt_delta: 0.0,
            eth_usd: price,
            address_type: None,
            line: 0,
        }
    }

    #[test]
    fn small_cdps_dropped() {
        let rs = vec![
            rec(1, "small", Action::Open, 0.4, 100.0),
            rec(2, "big", Action::Open, 1.0, 100.0),
        ];
        let kept = clean_filter(&rs, 50.0, None, false);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].cdp_id, "big");
        assert_eq!(clean_filter(&rs, 0.0, None, false).len(), 2);
    }

    #[test]
    fn cutoff_and_contracts() {
        let cutoff = chrono::NaiveDate::from_ymd_opt(2019, 11, 18)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
            .and_utc()
            .timestamp();
        let mut late = rec(cutoff + 3600, "x", Action::Lock, 1.0, 100.0);
        late.address = "b".into();
        let mut contract = rec(1, "y", Action::Open, 1.0, 100.0);
        contract.address_type = Some(AddressType::Contract);
        let rs = vec![rec(1, "x", Action::Open, 1.0, 100.0), late, contract];
        let kept = clean_filter(&rs, 0.0, Some(cutoff), true);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].timestamp, 1);
    }
}
