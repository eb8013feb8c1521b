//! Capital structure without attack vectors.
//!
//! Governance picks the interest rate `delta` to maximize fee revenue
//! `E[delta F + kappa]`. The vault, endowed with collateral `N`, picks the
//! face value `F <= beta N` to maximize `E[N R + F (B b - delta)]`, where the
//! issuance price `B` is the holder's expected utility of one coin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::map_slice;
use crate::grid::{argmax_first, strictly_better, unit_grid, GridConfig};
use crate::model::{ReturnModel, UtilityFunction};
use crate::options::{SolverOptions, Timing};
use crate::params::ScenarioParams;
use crate::report::{
    AttackSummary, Diagnostics, EquilibriumReport, GovTokenPath, Objectives, Problem, RunHeader,
    StdErrors, ARTIFACT_VERSION,
};
use crate::stochastics::{
    estimate_values, expected_value, utility_of_values, Estimate, SampleSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaultDecisionP1 {
    pub f: f64,
    pub participates: bool,
    pub objective: f64,
    pub b_price: f64,
    #[serde(skip)]
    pub b_std_error: f64,
    #[serde(skip)]
    pub vault_std_error: f64,
}

/// Per-coin repayment, capped at face value and floored at zero.
pub(crate) fn repayment_per_coin(f: f64, backing: f64) -> f64 {
    (f.min(backing) / f).max(0.0)
}

/// Expected utility of holding one coin when `f` face value is issued against `n`.
pub fn stbl_price_p1(
    f: f64,
    n: f64,
    delta: f64,
    samples: &SampleSet,
    holder_u: &UtilityFunction,
) -> Result<f64> {
    stbl_price_with_error(f, n, delta, samples, holder_u).map(|e| e.value)
}

fn stbl_price_with_error(
    f: f64,
    n: f64,
    delta: f64,
    samples: &SampleSet,
    holder_u: &UtilityFunction,
) -> Result<Estimate> {
    if !(n > 0.0) {
        return Err(Error::NonPositiveCollateral(n));
    }
    let payoffs: Vec<f64> = if f == 0.0 {
        vec![1.0; samples.count()]
    } else {
        samples
            .returns()
            .iter()
            .map(|&r| repayment_per_coin(f, n * (1.0 + r) - delta * f))
            .collect()
    };
    price_estimate(holder_u, samples, &payoffs)
}

pub(crate) fn price_estimate(
    holder_u: &UtilityFunction,
    samples: &SampleSet,
    payoffs: &[f64],
) -> Result<Estimate> {
    let value = utility_of_values(holder_u, samples, payoffs)?;
    let std_error = match holder_u {
        UtilityFunction::RiskNeutral | UtilityFunction::MeanVariance { .. } => {
            estimate_values(samples, payoffs).std_error
        }
        _ => {
            let us = payoffs
                .iter()
                .map(|&x| holder_u.eval(x))
                .collect::<Result<Vec<_>>>()?;
            estimate_values(samples, &us).std_error
        }
    };
    Ok(Estimate { value, std_error })
}

pub(crate) fn face_value_grid(beta: f64, n: f64, grid: &GridConfig) -> Result<Vec<f64>> {
    if grid.f_points == 0 {
        return Err(Error::EmptyGrid("face value grid"));
    }
    Ok(unit_grid(grid.f_points)?
        .into_iter()
        .map(|g| beta * n * g)
        .collect())
}

/// Vault's best face value at rate `delta`; ties go to the smallest `F`.
pub fn vault_best_response_p1(
    delta: f64,
    params: &ScenarioParams,
    n: f64,
    samples: &SampleSet,
    holder_u: &UtilityFunction,
    grid: &GridConfig,
) -> Result<VaultDecisionP1> {
    let er = expected_value(samples, |r| r)?.value;
    best_response(delta, params, n, er, samples, holder_u, grid)
}

fn best_response(
    delta: f64,
    params: &ScenarioParams,
    n: f64,
    er: f64,
    samples: &SampleSet,
    holder_u: &UtilityFunction,
    grid: &GridConfig,
) -> Result<VaultDecisionP1> {
    let fs = face_value_grid(params.beta, n, grid)?;
    let mut prices = Vec::with_capacity(fs.len());
    let mut objectives = Vec::with_capacity(fs.len());
    for &f in &fs {
        let b = stbl_price_with_error(f, n, delta, samples, holder_u)?;
        objectives.push(n * er + f * (b.value * params.b - delta));
        prices.push(b);
    }
    let best = argmax_first(&objectives).ok_or(Error::EmptyGrid("face value grid"))?;
    let participates = !strictly_better(params.u, objectives[best]);
    let pick = if participates { best } else { 0 };
    let margin = fs[pick] * (prices[pick].value * params.b - delta);
    let realized: Vec<f64> = samples.returns().iter().map(|&r| n * r + margin).collect();
    Ok(VaultDecisionP1 {
        f: fs[pick],
        participates,
        objective: objectives[pick],
        b_price: prices[pick].value,
        b_std_error: prices[pick].std_error,
        vault_std_error: estimate_values(samples, &realized).std_error,
    })
}

pub(crate) fn check_inputs(
    params: &ScenarioParams,
    model: &ReturnModel,
    holder_u: &UtilityFunction,
) -> Result<()> {
    let mut v = params.violations();
    v.extend(model.violations());
    v.extend(holder_u.violations());
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(v))
    }
}

pub(crate) fn run_header(samples: &SampleSet, opts: &SolverOptions, deltas: usize, n_points: usize) -> RunHeader {
    RunHeader {
        artifact_version: ARTIFACT_VERSION.to_string(),
        seed: samples.seed(),
        sample_count: samples.count(),
        sampling_exact: samples.is_exact(),
        delta_grid_points: deltas,
        f_grid_points: opts.grid.f_points,
        n_grid_points: n_points,
        timing: opts.timing.as_str().to_string(),
    }
}

/// Solves the no-attack game with the vault's collateral fixed at `n_bar`.
pub fn solve_p1(
    params: &ScenarioParams,
    model: &ReturnModel,
    holder_u: &UtilityFunction,
    opts: &SolverOptions,
) -> Result<EquilibriumReport> {
    check_inputs(params, model, holder_u)?;
    let samples = SampleSet::build(model, &opts.sampling)?;
    solve_p1_on(params, &samples, holder_u, opts)
}

/// [`solve_p1`] over a caller-supplied sample set.
pub fn solve_p1_on(
    params: &ScenarioParams,
    samples: &SampleSet,
    holder_u: &UtilityFunction,
    opts: &SolverOptions,
) -> Result<EquilibriumReport> {
    let n = params.n_bar;
    let deltas = opts.grid.deltas()?;
    let r_est = expected_value(samples, |r| r)?;
    let respond = |delta: f64| {
        best_response(delta, params, n, r_est.value, samples, holder_u, &opts.grid)
    };

    let (k, response, converged, iterations) = match opts.timing {
        Timing::Sequential => {
            let responses = map_slice(opts.exec, &deltas, |&d| respond(d))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let revenue: Vec<f64> = deltas
                .iter()
                .zip(&responses)
                .map(|(d, v)| d * v.f + params.kappa)
                .collect();
            let k = argmax_first(&revenue).ok_or(Error::EmptyGrid("delta grid"))?;
            (k, responses[k], true, 1)
        }
        Timing::Concurrent => {
            let mut k = 0usize;
            let mut response = respond(deltas[0])?;
            let mut converged = false;
            let mut iterations = 0;
            while iterations < opts.max_iterations.max(1) {
                iterations += 1;
                let revenue: Vec<f64> = deltas.iter().map(|d| d * response.f + params.kappa).collect();
                let best = argmax_first(&revenue).ok_or(Error::EmptyGrid("delta grid"))?;
                // keep the current rate while it is still a best response
                if !strictly_better(revenue[best], revenue[k]) {
                    converged = true;
                    break;
                }
                k = best;
                response = respond(deltas[k])?;
            }
            (k, response, converged, iterations)
        }
    };

    let delta = deltas[k];
    let gov = delta * response.f + params.kappa;
    Ok(EquilibriumReport {
        problem: Problem::CapitalStructure,
        run: run_header(samples, opts, deltas.len(), 1),
        delta_star: delta,
        f_star: response.f,
        n_star: n,
        b_price: response.b_price,
        participates: response.participates,
        gov_path: GovTokenPath {
            p0: gov,
            p1: gov,
            p2: gov,
            p2_expected: gov,
        },
        attack: AttackSummary::none(),
        bribes: None,
        portfolios: None,
        objectives: Objectives {
            governance: gov,
            vault: response.objective,
            holder: None,
        },
        diagnostics: Diagnostics {
            converged,
            iterations,
            cycle_length: None,
            std_errors: StdErrors {
                governance: 0.0,
                vault: response.vault_std_error,
                b_price: response.b_std_error,
            },
        },
    })
}
