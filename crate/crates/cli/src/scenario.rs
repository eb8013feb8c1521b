//! Scenario files: one TOML document per run, optionally fanned out by
//! `[[sweep]]` blocks.

use std::path::{Path, PathBuf};

use capstruct::ingest::RhoReportConfig;
use capstruct::p2::RegionAxes;
use capstruct::p3::{P3Config, PriceModel};
use capstruct::p4::P4Config;
use capstruct::{ReturnModel, ScenarioParams, SolverOptions, UtilityFunction};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub params: ScenarioParams,
    pub return_model: Option<ReturnModel>,
    pub utility: UtilityFunction,
    pub solver: SolverOptions,
    pub p3: P3Config,
    pub p4: P4Config,
    pub region: RegionAxes,
    pub ingest: IngestSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub cdp_csv: Option<PathBuf>,
    pub prices_csv: Option<PathBuf>,
    pub min_collateral_usd: f64,
    /// Unix seconds; later actions are dropped.
    pub cutoff_timestamp: Option<i64>,
    pub eoa_only: bool,
    pub assume_reinvest: bool,
    pub histogram_bins: usize,
    /// Upper edge of the plotted rho range.
    pub histogram_cap: f64,
    pub report: RhoReportConfig,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            cdp_csv: None,
            prices_csv: None,
            min_collateral_usd: 0.0,
            cutoff_timestamp: None,
            eoa_only: false,
            assume_reinvest: true,
            histogram_bins: 50,
            histogram_cap: 1.0,
            report: RhoReportConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepBlock {
    /// Dotted path into the scenario, e.g. `params.kappa_usd`.
    key: String,
    values: Option<Vec<Value>>,
    start: Option<f64>,
    stop: Option<f64>,
    steps: Option<usize>,
}

impl SweepBlock {
    fn expand(&self) -> Result<Vec<Value>, String> {
        match (&self.values, self.start, self.stop, self.steps) {
            (Some(v), None, None, None) if !v.is_empty() => Ok(v.clone()),
            (None, Some(a), Some(b), Some(n)) if n > 0 => Ok((0..n)
                .map(|i| {
                    let x = if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 };
                    Value::Float(x)
                })
                .collect()),
            _ => Err(format!(
                "sweep {}: give either a non-empty `values` list or `start`, `stop` and `steps >= 1`",
                self.key
            )),
        }
    }
}

/// One expanded scenario with the sweep assignments that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub assignments: Vec<(String, Value)>,
    pub scenario: ScenarioFile,
}

fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<(), String> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) || key == "output.path" || parts[0] == "sweep" {
        return Err(format!("sweep key `{key}` cannot be swept"));
    }
    let (last, parents) = parts.split_last().unwrap();
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| format!("sweep key `{key}`: `{p}` is not a table"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Cartesian product of the sweep blocks. The first block varies slowest and
/// values keep their listed order.
pub fn expand(text: &str) -> Result<Vec<Cell>, Vec<String>> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| vec![e.to_string()])?;
    let blocks: Vec<SweepBlock> = match table.remove("sweep") {
        None => Vec::new(),
        Some(v) => v.try_into().map_err(|e: toml::de::Error| vec![format!("sweep: {e}")])?,
    };
    let mut axes = Vec::with_capacity(blocks.len());
    let mut errors = Vec::new();
    for b in &blocks {
        match b.expand() {
            Ok(v) => axes.push(v),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let total: usize = axes.iter().map(Vec::len).product();
    let mut cells = Vec::with_capacity(total);
    for index in 0..total {
        let mut rem = index;
        let mut picks = vec![0; axes.len()];
        for (k, axis) in axes.iter().enumerate().rev() {
            picks[k] = rem % axis.len();
            rem /= axis.len();
        }
        let mut t = table.clone();
        let mut assignments = Vec::with_capacity(blocks.len());
        for (k, b) in blocks.iter().enumerate() {
            let v = axes[k][picks[k]].clone();
            if let Err(e) = set_dotted(&mut t, &b.key, v.clone()) {
                errors.push(e);
            }
            assignments.push((b.key.clone(), v));
        }
        match Value::Table(t).try_into::<ScenarioFile>() {
            Ok(scenario) => cells.push(Cell {
                index,
                assignments,
                scenario,
            }),
            Err(e) if total == 1 => errors.push(e.to_string()),
            Err(e) => errors.push(format!("cell {index}: {e}")),
        }
    }
    if errors.is_empty() {
        Ok(cells)
    } else {
        errors.dedup();
        Err(errors)
    }
}

/// Input paths in the file are relative to the file itself.
pub fn resolve_paths(s: &mut ScenarioFile, base: &Path) {
    let fix = |p: &mut Option<PathBuf>| {
        if let Some(path) = p {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    };
    fix(&mut s.ingest.cdp_csv);
    fix(&mut s.ingest.prices_csv);
    fix(&mut s.output.path);
}

pub fn check_price_model(name: &str) -> Result<(), String> {
    if PriceModel::NAMES.contains(&name) {
        Ok(())
    } else {
        Err(format!(
            "price model `{name}` is unknown; expected one of {}",
            PriceModel::NAMES.join(", ")
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_file_is_one_cell() {
        let cells = expand("[params]\nkappa_usd = 5.0\n").unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].scenario.params.kappa, 5.0);
        assert!(cells[0].assignments.is_empty());
    }

    #[test]
    fn sweeps_expand_first_block_slowest() {
        let text = r#"
[[sweep]]
key = "params.kappa_usd"
values = [1.0, 2.0]

[[sweep]]
key = "solver.sampling.seed"
values = [7, 8, 9]
"#;
        let cells = expand(text).unwrap();
        let got: Vec<(f64, u64)> = cells
            .iter()
            .map(|c| (c.scenario.params.kappa, c.scenario.solver.sampling.seed))
            .collect();
        assert_eq!(
            got,
            vec![(1.0, 7), (1.0, 8), (1.0, 9), (2.0, 7), (2.0, 8), (2.0, 9)]
        );
    }

    #[test]
    fn ranges_are_inclusive() {
        let text = "[[sweep]]\nkey = \"params.beta_frac\"\nstart = 0.2\nstop = 0.6\nsteps = 3\n";
        let betas: Vec<f64> = expand(text).unwrap().iter().map(|c| c.scenario.params.beta).collect();
        assert_eq!(betas, vec![0.2, 0.4, 0.6]);
    }

    #[test]
    fn unit_free_keys_are_rejected() {
        let err = expand("[params]\nkappa = 5.0\n").unwrap_err();
        assert!(err[0].contains("kappa"), "{err:?}");
    }

    #[test]
    fn bad_sweep_blocks_are_reported() {
        let err = expand("[[sweep]]\nkey = \"params.kappa_usd\"\n").unwrap_err();
        assert!(err[0].contains("params.kappa_usd"));
        let err = expand("[params]\nkappa_usd = 1.0\n[[sweep]]\nkey = \"params.kappa_usd.x\"\nvalues = [1]\n").unwrap_err();
        assert!(err[0].contains("not a table"), "{err:?}");
    }
}
