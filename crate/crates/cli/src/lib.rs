//! Scenario-driven front end for the capstruct solvers.
//!
//! Exit codes: 0 success, 1 solver or I/O failure, 2 invalid scenario, 3 no
//! convergence (the report is still written), 64 usage error, 66 unreadable
//! input.

pub mod output;
pub mod scenario;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use capstruct::ingest::{
    clean_filter, group_by_cdp, histogram, load_cdp_csv, load_price_csv, position_series,
    rho_report, write_histogram_csv, write_per_address_csv, write_per_cdp_csv,
    write_snapshots_csv, IngestError, MomentTable, RhoReport,
};
use capstruct::p2::{incentive_security_region, price_of_anarchy, solve_p2};
use capstruct::p3::solve_p3;
use capstruct::p4::simulate_p4;
use capstruct::p1::solve_p1;
use capstruct::report::ARTIFACT_VERSION;
use capstruct::{Error, ExecMode, GridConfig, ReturnModel};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::output::{cell_path, write_atomic, write_json};
use crate::scenario::{check_price_model, expand, resolve_paths, Cell, ScenarioFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_NO_INPUT: i32 = 66;

#[derive(Debug, Parser)]
#[command(name = "capstruct", version, about = "Stablecoin capital-structure solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// TOML scenario file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output file (a directory for estimate-rho); overrides `[output] path`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Evaluate candidates and sweep cells on the calling thread.
    #[arg(long)]
    sequential: bool,
    /// Worker threads for sweep cells.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone)]
struct Axis(Vec<f64>);

/// `a,b,c` or `start:stop:steps`.
fn parse_axis(s: &str) -> Result<Axis, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    if let [a, b, n] = s.split(':').collect::<Vec<_>>()[..] {
        let (a, b) = (num(a)?, num(b)?);
        let n: usize = n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?;
        if n == 0 {
            return Err("steps must be >= 1".into());
        }
        return Ok(Axis(
            (0..n)
                .map(|i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 })
                .collect(),
        ));
    }
    s.split(',').map(num).collect::<Result<Vec<_>, _>>().map(Axis)
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Governance and vault without attacks.
    SolveP1(Common),
    /// Governance and vault with the attack vector.
    SolveP2(Common),
    /// Collusion game between governance, vault and holder.
    SolveP3 {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        price_model: Option<String>,
    },
    /// Miner-absorbed issuance trajectory as CSV.
    SimulateP4 {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        rounds: usize,
    },
    /// Analytic and empirical incentive security over a parameter grid, as CSV.
    SecurityRegion {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_axis)]
        gamma: Option<Axis>,
        #[arg(long, value_parser = parse_axis)]
        zeta: Option<Axis>,
        #[arg(long, value_parser = parse_axis)]
        delta: Option<Axis>,
        #[arg(long, value_parser = parse_axis)]
        beta: Option<Axis>,
        #[arg(long, value_parser = parse_axis)]
        r: Option<Axis>,
    },
    /// Risk aversion from CDP action histories and a daily price series.
    EstimateRho {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cdp_csv: Option<PathBuf>,
        #[arg(long)]
        prices_csv: Option<PathBuf>,
    },
    /// Attack-exposed welfare over the attack-free optimum.
    PriceOfAnarchy(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SolveP1(_) => "solve-p1",
            Command::SolveP2(_) => "solve-p2",
            Command::SolveP3 { .. } => "solve-p3",
            Command::SimulateP4 { .. } => "simulate-p4",
            Command::SecurityRegion { .. } => "security-region",
            Command::EstimateRho { .. } => "estimate-rho",
            Command::PriceOfAnarchy(_) => "price-of-anarchy",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::SolveP1(c) | Command::SolveP2(c) | Command::PriceOfAnarchy(c) => c,
            Command::SolveP3 { common, .. }
            | Command::SimulateP4 { common, .. }
            | Command::SecurityRegion { common, .. }
            | Command::EstimateRho { common, .. } => common,
        }
    }

    fn needs_scenario(&self) -> bool {
        !matches!(self, Command::SecurityRegion { .. } | Command::EstimateRho { .. })
    }

    fn needs_return_model(&self) -> bool {
        !matches!(self, Command::SimulateP4 { .. } | Command::EstimateRho { .. })
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub messages: Vec<String>,
}

impl Failure {
    fn new(code: i32, msg: impl Into<String>) -> Self {
        Failure {
            code,
            messages: vec![msg.into()],
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.messages.join("\n"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid(v) => Failure {
                code: EXIT_INVALID,
                messages: v.iter().map(|v| v.to_string()).collect(),
            },
            Error::AttackGroupControlsRate => Failure::new(EXIT_INVALID, e.to_string()),
            Error::Ingest(e) => e.into(),
            e => Failure::new(EXIT_FAILURE, e.to_string()),
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let code = match e {
            IngestError::Io { .. } => EXIT_NO_INPUT,
            _ => EXIT_INVALID,
        };
        Failure::new(code, e.to_string())
    }
}

/// What a successful cell wrote.
struct Written {
    paths: Vec<PathBuf>,
    /// Set when the solver stopped without a fixed point.
    not_converged: Option<String>,
}

/// Reproducibility header written next to CSV outputs.
#[derive(Serialize)]
struct RunInfo<'a> {
    artifact_version: &'static str,
    command: &'static str,
    seed: u64,
    sample_count: usize,
    grid: GridConfig,
    assignments: BTreeMap<&'a str, &'a toml::Value>,
    scenario: &'a ScenarioFile,
}

impl<'a> RunInfo<'a> {
    fn new(command: &'static str, cell: &'a Cell) -> Self {
        let s = &cell.scenario;
        RunInfo {
            artifact_version: ARTIFACT_VERSION,
            command,
            seed: s.solver.sampling.seed,
            sample_count: s.solver.sampling.count,
            grid: s.solver.grid,
            assignments: cell.assignments.iter().map(|(k, v)| (k.as_str(), v)).collect(),
            scenario: s,
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(f) => {
            for m in &f.messages {
                eprintln!("error: {m}");
            }
            f.code
        }
    }
}

fn load_cells(cmd: &Command) -> Result<Vec<Cell>, Failure> {
    let common = cmd.common();
    let mut cells = match &common.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::new(EXIT_NO_INPUT, format!("cannot read {}: {e}", path.display()))
            })?;
            let mut cells = expand(&text).map_err(|messages| Failure {
                code: EXIT_INVALID,
                messages: messages
                    .into_iter()
                    .map(|m| format!("{}: {m}", path.display()))
                    .collect(),
            })?;
            let base = path.parent().unwrap_or(Path::new(""));
            for c in &mut cells {
                resolve_paths(&mut c.scenario, base);
            }
            cells
        }
        None if cmd.needs_scenario() => {
            return Err(Failure::new(
                EXIT_USAGE,
                format!("{} requires --scenario <file>", cmd.name()),
            ))
        }
        None => vec![Cell {
            index: 0,
            assignments: Vec::new(),
            scenario: ScenarioFile::default(),
        }],
    };

    for c in &mut cells {
        let s = &mut c.scenario;
        if let Some(seed) = common.seed {
            s.solver.sampling.seed = seed;
        }
        if let Some(n) = common.samples {
            s.solver.sampling.count = n;
        }
        if common.sequential {
            s.solver.exec = ExecMode::Sequential;
        }
        if let Some(out) = &common.out {
            s.output.path = Some(out.clone());
        }
        match cmd {
            Command::SecurityRegion {
                gamma,
                zeta,
                delta,
                beta,
                r,
                ..
            } => {
                let axes = &mut s.region;
                for (flag, axis) in [
                    (gamma, &mut axes.gamma),
                    (zeta, &mut axes.zeta),
                    (delta, &mut axes.delta),
                    (beta, &mut axes.beta),
                    (r, &mut axes.r),
                ] {
                    if let Some(Axis(v)) = flag {
                        *axis = v.clone();
                    }
                }
            }
            Command::EstimateRho {
                cdp_csv, prices_csv, ..
            } => {
                if cdp_csv.is_some() {
                    s.ingest.cdp_csv = cdp_csv.clone();
                }
                if prices_csv.is_some() {
                    s.ingest.prices_csv = prices_csv.clone();
                }
            }
            _ => {}
        }
    }
    Ok(cells)
}

/// Every violation of one cell, so a bad file is reported in a single pass.
fn violations(cmd: &Command, s: &ScenarioFile) -> Vec<String> {
    let mut v: Vec<String> = Vec::new();
    if !matches!(cmd, Command::EstimateRho { .. }) {
        v.extend(s.params.violations().into_iter().map(|e| format!("params.{e}")));
        v.extend(s.utility.violations().into_iter().map(|e| format!("utility.{e}")));
    }
    if cmd.needs_return_model() {
        match &s.return_model {
            Some(m) => v.extend(m.violations().into_iter().map(|e| format!("return_model.{e}"))),
            None => v.push("return_model is required".into()),
        }
    }
    let grid = &s.solver.grid;
    if let Err(e) = grid.deltas() {
        v.push(format!("solver.grid.delta_step: {e}"));
    }
    if grid.f_points == 0 {
        v.push("solver.grid.f_points must be >= 1".into());
    }
    if grid.n_points == 0 {
        v.push("solver.grid.n_points must be >= 1".into());
    }
    if s.solver.sampling.count == 0 {
        v.push("solver.sampling.count must be >= 1".into());
    }
    if s.solver.max_iterations == 0 {
        v.push("solver.max_iterations must be >= 1".into());
    }

    match cmd {
        Command::SolveP2(_) | Command::PriceOfAnarchy(_) if s.params.zeta >= 0.5 => {
            v.push(format!("params.{}", Error::AttackGroupControlsRate));
        }
        Command::SolveP3 { price_model, .. } => {
            if let Some(name) = price_model {
                if let Err(e) = check_price_model(name) {
                    v.push(e);
                }
            }
            if s.p3.alloc_points == 0 {
                v.push("p3.alloc_points must be >= 1".into());
            }
            if s.p3.bribe_points == 0 {
                v.push("p3.bribe_points must be >= 1".into());
            }
        }
        Command::SimulateP4 { .. } => {
            v.extend(
                s.p4.expectation
                    .violations()
                    .into_iter()
                    .map(|e| format!("p4.expectation.{e}")),
            );
            if s.p4.r_points == 0 {
                v.push("p4.r_points must be >= 1".into());
            }
            if s.p4.rebalance_points == 0 {
                v.push("p4.rebalance_points must be >= 1".into());
            }
            if !(s.p4.alt_price > 0.0) {
                v.push("p4.alt_price must be > 0".into());
            }
        }
        Command::SecurityRegion { .. } => {
            let a = &s.region;
            for (name, axis) in [
                ("gamma", &a.gamma),
                ("zeta", &a.zeta),
                ("delta", &a.delta),
                ("beta", &a.beta),
                ("r", &a.r),
            ] {
                if axis.is_empty() {
                    v.push(format!("region.{name} is empty; pass --{name} or set it in the scenario"));
                }
                if axis.iter().any(|x| !x.is_finite()) {
                    v.push(format!("region.{name} must be finite"));
                }
            }
            if a.zeta.contains(&0.0) || a.delta.contains(&0.0) {
                v.push("region: zeta and delta must be non-zero".into());
            }
        }
        Command::EstimateRho { .. } => {
            let i = &s.ingest;
            if i.cdp_csv.is_none() {
                v.push("ingest.cdp_csv is required (or --cdp-csv)".into());
            }
            if i.prices_csv.is_none() {
                v.push("ingest.prices_csv is required (or --prices-csv)".into());
            }
            if i.histogram_bins == 0 {
                v.push("ingest.histogram_bins must be >= 1".into());
            }
            if !(i.histogram_cap > 0.0) {
                v.push("ingest.histogram_cap must be > 0".into());
            }
            if !(i.report.days_per_year > 0.0) {
                v.push("ingest.report.days_per_year must be > 0".into());
            }
        }
        _ => {}
    }
    v
}

fn execute(cmd: &Command) -> Result<i32, Failure> {
    let cells = load_cells(cmd)?;

    let mut messages = Vec::new();
    for c in &cells {
        let prefix = if cells.len() > 1 { format!("cell {}: ", c.index) } else { String::new() };
        messages.extend(violations(cmd, &c.scenario).into_iter().map(|m| format!("{prefix}{m}")));
    }
    if !messages.is_empty() {
        return Err(Failure {
            code: EXIT_INVALID,
            messages,
        });
    }

    let Some(base_out) = cells[0].scenario.output.path.clone() else {
        return Err(Failure::new(EXIT_USAGE, "no output: pass --out or set [output] path"));
    };
    let is_dir = matches!(cmd, Command::EstimateRho { .. });
    let targets: Vec<PathBuf> = cells
        .iter()
        .map(|c| {
            let own = c.scenario.output.path.clone().unwrap_or_else(|| base_out.clone());
            cell_path(&own, c.index, cells.len(), is_dir)
        })
        .collect();

    let common = cmd.common();
    let jobs = if common.sequential { Some(1) } else { common.jobs };
    let results = run_pool(jobs, cells.len(), |i| run_cell(cmd, &cells[i], &targets[i]));

    if cells.len() > 1 {
        write_sweep_index(&base_out, is_dir, &cells, &targets)?;
    }

    let mut code = EXIT_OK;
    for (cell, res) in cells.iter().zip(results) {
        match res {
            Ok(w) => {
                for p in &w.paths {
                    eprintln!("wrote {}", p.display());
                }
                if let Some(note) = w.not_converged {
                    eprintln!("cell {}: not converged: {note}", cell.index);
                    if code == EXIT_OK {
                        code = EXIT_NOT_CONVERGED;
                    }
                }
            }
            Err(f) => {
                for m in &f.messages {
                    eprintln!("error: cell {}: {m}", cell.index);
                }
                if code == EXIT_OK || code == EXIT_NOT_CONVERGED {
                    code = f.code;
                }
            }
        }
    }
    Ok(code)
}

#[cfg(feature = "parallel")]
fn run_pool<T: Send>(jobs: Option<usize>, n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    use rayon::prelude::*;
    if n > 1 {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = jobs {
            b = b.num_threads(j);
        }
        if let Ok(pool) = b.build() {
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
    }
    (0..n).map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_pool<T: Send>(_jobs: Option<usize>, n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    (0..n).map(f).collect()
}

fn return_model(s: &ScenarioFile) -> &ReturnModel {
    s.return_model.as_ref().expect("validated")
}

fn run_cell(cmd: &Command, cell: &Cell, out: &Path) -> Result<Written, Failure> {
    let s = &cell.scenario;
    let opts = &s.solver;
    let single = |not_converged| Written {
        paths: vec![out.to_path_buf()],
        not_converged,
    };
    match cmd {
        Command::SolveP1(_) | Command::SolveP2(_) => {
            let report = if matches!(cmd, Command::SolveP1(_)) {
                solve_p1(&s.params, return_model(s), &s.utility, opts)?
            } else {
                solve_p2(&s.params, return_model(s), &s.utility, opts)?
            };
            write_json(out, &report)?;
            let d = &report.diagnostics;
            Ok(single((!d.converged).then(|| format!("{} iterations", d.iterations))))
        }
        Command::SolveP3 { price_model, .. } => {
            let mut cfg = s.p3;
            if let Some(name) = price_model {
                cfg.price_model = cfg.price_model.with_name(name).expect("validated");
            }
            let prices = cfg.price_model.build(s.params.kappa);
            let sol = solve_p3(&s.params, return_model(s), &s.utility, prices.as_ref(), &cfg, opts)?;
            write_json(out, &sol)?;
            let d = &sol.report.diagnostics;
            Ok(single((!d.converged).then(|| match d.cycle_length {
                Some(n) => format!("best responses cycle with period {n} after {} iterations", d.iterations),
                None => format!("{} iterations", d.iterations),
            })))
        }
        Command::PriceOfAnarchy(_) => {
            let poa = price_of_anarchy(&s.params, return_model(s), &s.utility, opts)?;
            write_json(out, &poa)?;
            let stuck = !poa.centralized.diagnostics.converged || !poa.decentralized.diagnostics.converged;
            Ok(single(stuck.then(|| "an equilibrium search hit the iteration cap".to_string())))
        }
        Command::SimulateP4 { rounds, .. } => {
            let rows = simulate_p4(&s.params, &s.p4.prices, &s.p4, &s.utility, *rounds, &opts.sampling)?;
            let csv = csv_bytes(&rows)?;
            write_atomic(out, &csv)?;
            let info = sidecar(out);
            write_json(&info, &RunInfo::new(cmd.name(), cell))?;
            Ok(Written {
                paths: vec![out.to_path_buf(), info],
                not_converged: None,
            })
        }
        Command::SecurityRegion { .. } => {
            let model = return_model(s);
            let samples = capstruct::SampleSet::build(model, &opts.sampling)?;
            let points = incentive_security_region(&s.params, &s.region, &samples, &s.utility, &opts.grid, opts.exec)?;
            write_atomic(out, &csv_bytes(&points)?)?;
            let info = sidecar(out);
            write_json(&info, &RunInfo::new(cmd.name(), cell))?;
            let stuck = points
                .iter()
                .filter(|p| p.empirical_secure.is_some() && !p.kappa_converged)
                .count();
            Ok(Written {
                paths: vec![out.to_path_buf(), info],
                not_converged: (stuck > 0).then(|| format!("kappa coupling did not settle at {stuck} grid point(s)")),
            })
        }
        Command::EstimateRho { .. } => estimate_rho(cmd, cell, out),
    }
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(OsString::from).unwrap_or_default();
    name.push(".run.json");
    out.with_file_name(name)
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
    }
    w.into_inner().map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))
}

#[derive(Serialize)]
struct RhoSummary<'a> {
    run: RunInfo<'a>,
    records_read: usize,
    records_kept: usize,
    cdps: usize,
    estimated_cdps: usize,
    mean_rho_per_cdp: Option<f64>,
    active_addresses: usize,
    mean_rho_per_active_address: Option<f64>,
    skipped_uncovered: usize,
    skipped_zero_variance: usize,
    skipped_invalid: usize,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, sum) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| sum / n as f64)
}

fn estimate_rho(cmd: &Command, cell: &Cell, dir: &Path) -> Result<Written, Failure> {
    let s = &cell.scenario;
    let ing = &s.ingest;
    let records = load_cdp_csv(ing.cdp_csv.as_deref().expect("validated"))?;
    let kept = clean_filter(&records, ing.min_collateral_usd, ing.cutoff_timestamp, ing.eoa_only);
    let groups = group_by_cdp(&kept);
    let positions = capstruct::exec::map_slice(s.solver.exec, &groups, |g| position_series(g, ing.assume_reinvest))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let prices = load_price_csv(ing.prices_csv.as_deref().expect("validated"))?;
    let moments = MomentTable::from_prices(&prices)?;
    let report: RhoReport = rho_report(&positions, &moments, &ing.report);
    let cdp_rhos: Vec<f64> = report.per_cdp.iter().map(|c| c.mean_rho).collect();
    let bins = histogram(&cdp_rhos, ing.histogram_bins, ing.histogram_cap);

    let mut paths = Vec::new();
    let mut emit = |name: &str, write: &dyn Fn(&mut Vec<u8>) -> Result<(), IngestError>| -> Result<(), Failure> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        let p = dir.join(name);
        write_atomic(&p, &buf)?;
        paths.push(p);
        Ok(())
    };
    emit("rho_per_cdp.csv", &|b| write_per_cdp_csv(b, &report))?;
    emit("rho_per_address.csv", &|b| write_per_address_csv(b, &report))?;
    emit("rho_snapshots.csv", &|b| write_snapshots_csv(b, &report))?;
    emit("rho_histogram.csv", &|b| write_histogram_csv(b, &bins))?;

    let summary = RhoSummary {
        run: RunInfo::new(cmd.name(), cell),
        records_read: records.len(),
        records_kept: kept.len(),
        cdps: positions.len(),
        estimated_cdps: report.per_cdp.len(),
        mean_rho_per_cdp: mean(cdp_rhos.iter().copied()),
        active_addresses: report.active_addresses().count(),
        mean_rho_per_active_address: mean(report.active_addresses().map(|a| a.mean_rho)),
        skipped_uncovered: report.skipped_uncovered,
        skipped_zero_variance: report.skipped_zero_variance,
        skipped_invalid: report.skipped_invalid,
    };
    let p = dir.join("summary.json");
    write_json(&p, &summary)?;
    paths.push(p);
    Ok(Written {
        paths,
        not_converged: None,
    })
}

#[derive(Serialize)]
struct SweepEntry<'a> {
    cell: usize,
    path: &'a Path,
    assignments: BTreeMap<&'a str, &'a toml::Value>,
}

fn write_sweep_index(base: &Path, is_dir: bool, cells: &[Cell], targets: &[PathBuf]) -> Result<(), Failure> {
    let entries: Vec<SweepEntry> = cells
        .iter()
        .zip(targets)
        .map(|(c, t)| SweepEntry {
            cell: c.index,
            path: t,
            assignments: c.assignments.iter().map(|(k, v)| (k.as_str(), v)).collect(),
        })
        .collect();
    let path = if is_dir { base.join("sweep.json") } else { sidecar_named(base, "sweep.json") };
    write_json(&path, &entries)
}

fn sidecar_named(base: &Path, suffix: &str) -> PathBuf {
    let stem = base.file_stem().map(OsString::from).unwrap_or_default();
    let mut name = stem;
    name.push(".");
    name.push(suffix);
    base.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_parse_lists_and_ranges() {
        assert_eq!(parse_axis("0.1, 0.2,0.3").unwrap().0, vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_axis("0:1:3").unwrap().0, vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_axis("2:9:1").unwrap().0, vec![2.0]);
        assert!(parse_axis("0:1:0").is_err());
        assert!(parse_axis("a,b").is_err());
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar(Path::new("out/r.csv")), PathBuf::from("out/r.csv.run.json"));
        assert_eq!(sidecar_named(Path::new("out/r.json"), "sweep.json"), PathBuf::from("out/r.sweep.json"));
    }
}
