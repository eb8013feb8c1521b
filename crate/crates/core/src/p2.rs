//! Capital structure with a governance attack vector.
//!
//! A `zeta` fraction of GOV can seize a `gamma` fraction of locked
//! collateral. The attack happens on a sample exactly when its proceeds
//! `gamma N (1 + R)` strictly exceed the opportunity cost
//! `zeta (delta F + kappa) + alpha`. The vault now also picks how much of its
//! endowment `N̄` to lock.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::map_slice;
use crate::grid::{argmax_first, strictly_better, unit_grid, GridConfig};
use crate::model::{ReturnModel, UtilityFunction};
use crate::options::{SolverOptions, Timing};
use crate::p1::{check_inputs, face_value_grid, price_estimate, repayment_per_coin, run_header, solve_p1_on};
use crate::params::ScenarioParams;
use crate::report::{
    AttackSummary, Diagnostics, EquilibriumReport, GovTokenPath, Objectives, Problem, StdErrors,
};
use crate::stochastics::{estimate_values, SampleSet};

/// `1` iff `gamma n (1 + r) > zeta (delta f + kappa) + alpha`.
pub fn attack_indicator(r_realized: f64, n: f64, f: f64, delta: f64, params: &ScenarioParams) -> u8 {
    let proceeds = params.gamma * n * (1.0 + r_realized);
    let cost = params.zeta * (delta * f + params.kappa) + params.alpha;
    u8::from(proceeds > cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaultDecisionP2 {
    pub n: f64,
    pub f: f64,
    pub participates: bool,
    pub objective: f64,
    pub b_price: f64,
    pub attack_probability: f64,
    #[serde(skip)]
    pub b_std_error: f64,
    #[serde(skip)]
    pub vault_std_error: f64,
}

pub(crate) fn collateral_grid(n_bar: f64, grid: &GridConfig) -> Result<Vec<f64>> {
    match grid.n_points {
        0 => Err(Error::EmptyGrid("collateral grid")),
        1 => Ok(vec![n_bar]),
        _ => Ok(unit_grid(grid.n_points)?.into_iter().map(|g| n_bar * g).collect()),
    }
}

/// `F_j <= beta N_i` decided on grid indices, free of rounding.
fn face_value_fits(i: usize, j: usize, grid: &GridConfig) -> bool {
    if grid.n_points <= 1 {
        return true;
    }
    if grid.f_points <= 1 {
        return true;
    }
    j * (grid.n_points - 1) <= i * (grid.f_points - 1)
}

struct Candidate {
    objective: f64,
    rhs: f64,
    b_price: f64,
    b_std_error: f64,
    attack_probability: f64,
    vault_std_error: f64,
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    n: f64,
    f: f64,
    delta: f64,
    params: &ScenarioParams,
    er: f64,
    samples: &SampleSet,
    holder_u: &UtilityFunction,
) -> Result<Candidate> {
    let rs = samples.returns();
    let d: Vec<f64> = rs
        .iter()
        .map(|&r| f64::from(attack_indicator(r, n, f, delta, params)))
        .collect();
    let payoffs: Vec<f64> = if f == 0.0 {
        vec![1.0; rs.len()]
    } else {
        rs.iter()
            .zip(&d)
            .map(|(&r, &di)| repayment_per_coin(f, (1.0 - params.gamma * di) * n * (1.0 + r) - delta * f))
            .collect()
    };
    let b = price_estimate(holder_u, samples, &payoffs)?;
    let margin = f * (b.value * params.b - delta);

    let kept: Vec<f64> = rs.iter().zip(&d).map(|(&r, &di)| (1.0 - di) * r).collect();
    let seized: Vec<f64> = rs.iter().zip(&d).map(|(&r, &di)| di * (1.0 + r)).collect();
    let e_kept = estimate_values(samples, &kept).value;
    let e_seized = estimate_values(samples, &seized).value;
    let objective = ((params.n_bar - n) * er + n * e_kept) - n * e_seized + margin;

    let lost: Vec<f64> = rs.iter().zip(&d).map(|(&r, &di)| di * params.gamma * n * (1.0 + r)).collect();
    let rhs = margin - estimate_values(samples, &lost).value;

    let realized: Vec<f64> = rs
        .iter()
        .zip(&d)
        .map(|(&r, &di)| ((params.n_bar - n) * r + (1.0 - di) * n * r) - di * n * (1.0 + r) + margin)
        .collect();
    Ok(Candidate {
        objective,
        rhs,
        b_price: b.value,
        b_std_error: b.std_error,
        attack_probability: estimate_values(samples, &d).value,
        vault_std_error: estimate_values(samples, &realized).std_error,
    })
}

/// Joint `(N, F)` best response at rate `delta`. Candidates that violate the
/// participation constraint are discarded; ties go to the smallest `F`, then
/// the largest `N`.
pub fn vault_best_response_p2(
    delta: f64,
    params: &ScenarioParams,
    samples: &SampleSet,
    holder_u: &UtilityFunction,
    grid: &GridConfig,
) -> Result<VaultDecisionP2> {
    let er = estimate_values(samples, samples.returns()).value;
    best_response(delta, params, er, samples, holder_u, grid)
}

fn best_response(
    delta: f64,
    params: &ScenarioParams,
    er: f64,
    samples: &SampleSet,
    holder_u: &UtilityFunction,
    grid: &GridConfig,
) -> Result<VaultDecisionP2> {
    let ns = collateral_grid(params.n_bar, grid)?;
    let fs = face_value_grid(params.beta, params.n_bar, grid)?;
    let mut best: Option<(f64, VaultDecisionP2)> = None;
    for (j, &f) in fs.iter().enumerate() {
        for (i, &n) in ns.iter().enumerate().rev() {
            if !face_value_fits(i, j, grid) || (n == 0.0 && f > 0.0) {
                continue;
            }
            let c = evaluate(n, f, delta, params, er, samples, holder_u)?;
            let participating = n > 0.0;
            if participating && strictly_better(params.u, c.rhs) {
                continue;
            }
            if best.as_ref().is_none_or(|(v, _)| strictly_better(c.objective, *v)) {
                best = Some((
                    c.objective,
                    VaultDecisionP2 {
                        n,
                        f,
                        participates: participating,
                        objective: c.objective,
                        b_price: c.b_price,
                        attack_probability: c.attack_probability,
                        b_std_error: c.b_std_error,
                        vault_std_error: c.vault_std_error,
                    },
                ));
            }
        }
    }
    best.map(|(_, v)| v).ok_or(Error::EmptyGrid("collateral and face value grid"))
}

struct GovOutcome {
    value: f64,
    std_error: f64,
}

fn governance_value(delta: f64, v: &VaultDecisionP2, params: &ScenarioParams, samples: &SampleSet) -> GovOutcome {
    let fees = delta * v.f + params.kappa;
    let kept: Vec<f64> = samples
        .returns()
        .iter()
        .map(|&r| (1.0 - f64::from(attack_indicator(r, v.n, v.f, delta, params))) * fees)
        .collect();
    let e = estimate_values(samples, &kept);
    GovOutcome {
        value: e.value,
        std_error: e.std_error,
    }
}

pub(crate) fn check_attack_scope(params: &ScenarioParams) -> Result<()> {
    if params.zeta >= 0.5 {
        Err(Error::AttackGroupControlsRate)
    } else {
        Ok(())
    }
}

pub fn solve_p2(
    params: &ScenarioParams,
    model: &ReturnModel,
    holder_u: &UtilityFunction,
    opts: &SolverOptions,
) -> Result<EquilibriumReport> {
    check_inputs(params, model, holder_u)?;
    check_attack_scope(params)?;
    let samples = SampleSet::build(model, &opts.sampling)?;
    solve_p2_on(params, &samples, holder_u, opts)
}

/// [`solve_p2`] over a caller-supplied sample set.
pub fn solve_p2_on(
    params: &ScenarioParams,
    samples: &SampleSet,
    holder_u: &UtilityFunction,
    opts: &SolverOptions,
) -> Result<EquilibriumReport> {
    check_attack_scope(params)?;
    let deltas = opts.grid.deltas()?;
    let er = estimate_values(samples, samples.returns()).value;
    let respond = |delta: f64| best_response(delta, params, er, samples, holder_u, &opts.grid);

    let (k, v, gov, converged, iterations) = match opts.timing {
        Timing::Sequential => {
            let responses = map_slice(opts.exec, &deltas, |&d| respond(d))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let govs: Vec<GovOutcome> = deltas
                .iter()
                .zip(&responses)
                .map(|(&d, v)| governance_value(d, v, params, samples))
                .collect();
            let values: Vec<f64> = govs.iter().map(|g| g.value).collect();
            let k = argmax_first(&values).ok_or(Error::EmptyGrid("delta grid"))?;
            let g = govs.into_iter().nth(k).expect("index in range");
            (k, responses[k], g, true, 1)
        }
        Timing::Concurrent => {
            let mut k = 0usize;
            let mut v = respond(deltas[0])?;
            let mut converged = false;
            let mut iterations = 0;
            while iterations < opts.max_iterations.max(1) {
                iterations += 1;
                let values: Vec<f64> = deltas
                    .iter()
                    .map(|&d| governance_value(d, &v, params, samples).value)
                    .collect();
                let best = argmax_first(&values).ok_or(Error::EmptyGrid("delta grid"))?;
                if !strictly_better(values[best], values[k]) {
                    converged = true;
                    break;
                }
                k = best;
                v = respond(deltas[k])?;
            }
            let g = governance_value(deltas[k], &v, params, samples);
            (k, v, g, converged, iterations)
        }
    };

    let delta = deltas[k];
    let fees = delta * v.f + params.kappa;
    Ok(EquilibriumReport {
        problem: Problem::GovernanceAttack,
        run: run_header(samples, opts, deltas.len(), opts.grid.n_points),
        delta_star: delta,
        f_star: v.f,
        n_star: v.n,
        b_price: v.b_price,
        participates: v.participates,
        gov_path: GovTokenPath {
            p0: gov.value,
            p1: fees,
            p2: fees,
            p2_expected: gov.value,
        },
        attack: AttackSummary {
            probability: v.attack_probability,
            ..AttackSummary::none()
        },
        bribes: None,
        portfolios: None,
        objectives: Objectives {
            governance: gov.value,
            vault: v.objective,
            holder: None,
        },
        diagnostics: Diagnostics {
            converged,
            iterations,
            cycle_length: None,
            std_errors: StdErrors {
                governance: gov.std_error,
                vault: v.vault_std_error,
                b_price: v.b_std_error,
            },
        },
    })
}

/// One grid point of the incentive-security map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityPoint {
    pub gamma: f64,
    pub zeta: f64,
    pub delta: f64,
    pub beta: f64,
    pub r: f64,
    /// `gamma r / (zeta delta) < beta`.
    pub analytic_secure: bool,
    /// No attack on any sample and the vault participates, with `kappa`
    /// coupled to fees. Left empty when `zeta >= 0.5`.
    pub empirical_secure: Option<bool>,
    #[serde(skip)]
    pub kappa: f64,
    #[serde(skip)]
    pub kappa_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionAxes {
    pub gamma: Vec<f64>,
    pub zeta: Vec<f64>,
    pub delta: Vec<f64>,
    pub beta: Vec<f64>,
    pub r: Vec<f64>,
}

pub const KAPPA_DAMPING: f64 = 0.5;
pub const KAPPA_MAX_ITERATIONS: usize = 100;
pub const KAPPA_TOL: f64 = 1e-6;

pub fn analytic_secure(gamma: f64, zeta: f64, delta: f64, beta: f64, r: f64) -> Result<bool> {
    let denom = zeta * delta;
    if denom == 0.0 {
        return Err(Error::DivisionByZero("zeta * delta"));
    }
    Ok(gamma * r / denom < beta)
}

/// Vault response at a fixed rate with `kappa <- delta F / (1 - r)` iterated
/// to a damped fixed point. Returns the response, `kappa` and convergence.
pub fn coupled_kappa_response(
    delta: f64,
    params: &ScenarioParams,
    samples: &SampleSet,
    holder_u: &UtilityFunction,
    grid: &GridConfig,
) -> Result<(VaultDecisionP2, f64, bool)> {
    let r = params.r_discount;
    let er = estimate_values(samples, samples.returns()).value;
    let mut p = *params;
    p.kappa = delta * p.beta * p.n_bar / (1.0 - r);
    let mut v = best_response(delta, &p, er, samples, holder_u, grid)?;
    for _ in 0..KAPPA_MAX_ITERATIONS {
        let target = delta * v.f / (1.0 - r);
        let next = KAPPA_DAMPING * p.kappa + (1.0 - KAPPA_DAMPING) * target;
        let done = (next - p.kappa).abs() <= KAPPA_TOL * p.kappa.abs().max(1.0);
        p.kappa = next;
        v = best_response(delta, &p, er, samples, holder_u, grid)?;
        if done {
            return Ok((v, p.kappa, true));
        }
    }
    Ok((v, p.kappa, false))
}

/// Evaluates every axis combination in lexicographic order
/// `(gamma, zeta, delta, beta, r)`. `alpha` is forced to zero.
pub fn incentive_security_region(
    base: &ScenarioParams,
    axes: &RegionAxes,
    samples: &SampleSet,
    holder_u: &UtilityFunction,
    grid: &GridConfig,
    exec: crate::exec::ExecMode,
) -> Result<Vec<SecurityPoint>> {
    let mut points = Vec::new();
    for &gamma in &axes.gamma {
        for &zeta in &axes.zeta {
            for &delta in &axes.delta {
                for &beta in &axes.beta {
                    for &r in &axes.r {
                        points.push((gamma, zeta, delta, beta, r));
                    }
                }
            }
        }
    }
    map_slice(exec, &points, |&(gamma, zeta, delta, beta, r)| {
        let analytic = analytic_secure(gamma, zeta, delta, beta, r)?;
        let params = ScenarioParams {
            gamma,
            zeta,
            beta,
            r_discount: r,
            alpha: 0.0,
            ..*base
        };
        let (empirical, kappa, converged) = if zeta >= 0.5 {
            (None, f64::NAN, false)
        } else {
            let (v, kappa, converged) = coupled_kappa_response(delta, &params, samples, holder_u, grid)?;
            (Some(converged && v.participates && v.attack_probability == 0.0), kappa, converged)
        };
        Ok(SecurityPoint {
            gamma,
            zeta,
            delta,
            beta,
            r,
            analytic_secure: analytic,
            empirical_secure: empirical,
            kappa,
            kappa_converged: converged,
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceOfAnarchy {
    pub ratio: f64,
    pub decentralized_welfare: f64,
    pub centralized_welfare: f64,
    pub decentralized: EquilibriumReport,
    pub centralized: EquilibriumReport,
}

/// Welfare of the attack-exposed equilibrium over the attack-free benchmark,
/// both solved on one sample set.
pub fn price_of_anarchy(
    params: &ScenarioParams,
    model: &ReturnModel,
    holder_u: &UtilityFunction,
    opts: &SolverOptions,
) -> Result<PriceOfAnarchy> {
    check_inputs(params, model, holder_u)?;
    check_attack_scope(params)?;
    let samples = SampleSet::build(model, &opts.sampling)?;
    let centralized = solve_p1_on(params, &samples, holder_u, opts)?;
    let decentralized = solve_p2_on(params, &samples, holder_u, opts)?;
    let cw = centralized.welfare();
    if !(cw > 0.0) {
        return Err(Error::UndefinedWelfareRatio(cw));
    }
    let dw = decentralized.welfare();
    Ok(PriceOfAnarchy {
        ratio: dw / cw,
        decentralized_welfare: dw,
        centralized_welfare: cw,
        decentralized,
        centralized,
    })
}
