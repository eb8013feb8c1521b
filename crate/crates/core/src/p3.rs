//! Portfolio selection with a collusion attack vector.
//!
//! Three agents share one round:
//!
//! * an outside governor holding an `epsilon` share of GOV sets `delta` and
//!   decides whether to collude with the vault, the holder, or nobody;
//! * the vault splits its endowment `x̄` between COL and GOV, locks `N` of its
//!   COL, issues `F <= beta N` and offers a bribe `gamma_v`;
//! * the holder splits `ȳ` between COL, GOV and STBL and offers `gamma_s`.
//!
//! Every decision lives on a finite grid and is stored as a grid index.
//! [`solve_p3`] runs damped Gauss-Seidel best responses in the order governor,
//! vault, holder until a full sweep leaves every index unchanged.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_slice, ExecMode};
use crate::grid::{argmax_first, strictly_better, unit_grid, GridConfig};
use crate::model::{ReturnModel, UtilityFunction};
use crate::options::SolverOptions;
use crate::p1::{check_inputs, run_header};
use crate::params::ScenarioParams;
use crate::report::{
    AttackSummary, Bribes, Diagnostics, EquilibriumReport, GovTokenPath, Objectives, Portfolios,
    Problem, StdErrors,
};
use crate::stochastics::{estimate_values, utility_of_values, SampleSet};

/// Endogenous GOV and STBL prices.
pub trait PriceFunctions: Sync {
    /// `P1`; must equal `delta F + kappa` when `x_g = y_g = 0`.
    fn gov_price(&self, x_g: f64, y_g: f64, delta: f64, f: f64) -> f64;
    /// `B`; non-increasing in `f`, non-decreasing in `y_s`.
    fn stbl_price(&self, f: f64, y_s: f64) -> f64;
}

/// `delta f + kappa + pressure (x_g + y_g)`.
pub fn gov_price_default(x_g: f64, y_g: f64, delta: f64, f: f64, kappa: f64, pressure: f64) -> f64 {
    delta * f + kappa + pressure * (x_g + y_g)
}

/// `min(b_max, y_s / f)`, and `b_max` when nothing is issued.
pub fn stbl_price_default(f: f64, y_s: f64, b_max: f64) -> f64 {
    if f == 0.0 {
        b_max
    } else {
        b_max.min(y_s / f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPrices {
    pub kappa: f64,
    pub pressure: f64,
    pub b_max: f64,
}

impl PriceFunctions for LinearPrices {
    fn gov_price(&self, x_g: f64, y_g: f64, delta: f64, f: f64) -> f64 {
        gov_price_default(x_g, y_g, delta, f, self.kappa, self.pressure)
    }

    fn stbl_price(&self, f: f64, y_s: f64) -> f64 {
        stbl_price_default(f, y_s, self.b_max)
    }
}

/// GOV at its fee value and STBL fixed at `b_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PegPrices {
    pub kappa: f64,
    pub b_max: f64,
}

impl PriceFunctions for PegPrices {
    fn gov_price(&self, _x_g: f64, _y_g: f64, delta: f64, f: f64) -> f64 {
        delta * f + self.kappa
    }

    fn stbl_price(&self, _f: f64, _y_s: f64) -> f64 {
        self.b_max
    }
}

/// Named price families selectable from a scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriceModel {
    Linear { pressure: f64, b_max: f64 },
    Peg { b_max: f64 },
}

impl Default for PriceModel {
    fn default() -> Self {
        PriceModel::Linear {
            pressure: 0.0,
            b_max: 1.0,
        }
    }
}

impl PriceModel {
    pub const NAMES: [&'static str; 2] = ["linear", "peg"];

    pub fn name(&self) -> &'static str {
        match self {
            PriceModel::Linear { .. } => "linear",
            PriceModel::Peg { .. } => "peg",
        }
    }

    /// Same parameters under another family name.
    pub fn with_name(&self, name: &str) -> Option<PriceModel> {
        let (pressure, b_max) = match *self {
            PriceModel::Linear { pressure, b_max } => (pressure, b_max),
            PriceModel::Peg { b_max } => (0.0, b_max),
        };
        match name {
            "linear" => Some(PriceModel::Linear { pressure, b_max }),
            "peg" => Some(PriceModel::Peg { b_max }),
            _ => None,
        }
    }

    pub fn build(&self, kappa: f64) -> Box<dyn PriceFunctions> {
        match *self {
            PriceModel::Linear { pressure, b_max } => Box::new(LinearPrices {
                kappa,
                pressure,
                b_max,
            }),
            PriceModel::Peg { b_max } => Box::new(PegPrices { kappa, b_max }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct P3Config {
    /// Points per axis of the portfolio simplices (`K + 1`).
    pub alloc_points: usize,
    /// Bribe grid `{k / bribe_points : k < bribe_points}`.
    pub bribe_points: usize,
    pub price_model: PriceModel,
}

impl Default for P3Config {
    fn default() -> Self {
        P3Config {
            alloc_points: 11,
            bribe_points: 10,
            price_model: PriceModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Collusion {
    None,
    Vault,
    Holder,
}

impl Collusion {
    /// `(d_n, d_v, d_s)`.
    pub fn indicators(self) -> (u8, u8, u8) {
        match self {
            Collusion::None => (1, 0, 0),
            Collusion::Vault => (0, 1, 0),
            Collusion::Holder => (0, 0, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GovernorMove {
    pub delta: usize,
    pub collusion: Collusion,
}

/// Vault decision as grid indices: GOV share of `x̄`, locked share of COL,
/// issued share of `beta N`, bribe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct VaultMove {
    pub gov: usize,
    pub lock: usize,
    pub issue: usize,
    pub bribe: usize,
}

/// Holder decision as grid indices: COL and GOV shares of `ȳ`, bribe.
/// STBL takes the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct HolderMove {
    pub col: usize,
    pub gov: usize,
    pub bribe: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Profile {
    pub governor: GovernorMove,
    pub vault: VaultMove,
    pub holder: HolderMove,
}

impl Default for Profile {
    fn default() -> Self {
        Profile {
            governor: GovernorMove {
                delta: 0,
                collusion: Collusion::None,
            },
            vault: VaultMove::default(),
            holder: HolderMove::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaultPlan {
    pub x_c: f64,
    pub x_g: f64,
    pub n: f64,
    pub f: f64,
    pub gamma_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderPlan {
    pub y_c: f64,
    pub y_g: f64,
    pub y_s: f64,
    pub gamma_s: f64,
}

/// GOV tokens per dollar of holdings; zero holdings own no share.
fn gov_share(holding: f64, p1: f64) -> Result<f64> {
    if holding == 0.0 {
        Ok(0.0)
    } else if p1 > 0.0 {
        Ok(holding / p1)
    } else {
        Err(Error::NonPositiveGovPrice(p1))
    }
}

/// One instance of the game: parameters, grids, samples and prices.
pub struct P3Game<'a> {
    pub params: &'a ScenarioParams,
    pub samples: &'a SampleSet,
    pub holder_u: &'a UtilityFunction,
    pub prices: &'a dyn PriceFunctions,
    pub deltas: Vec<f64>,
    pub alloc_steps: usize,
    pub lock_grid: Vec<f64>,
    pub issue_grid: Vec<f64>,
    pub bribe_grid: Vec<f64>,
    pub exec: ExecMode,
    er: f64,
}

impl<'a> P3Game<'a> {
    pub fn new(
        params: &'a ScenarioParams,
        samples: &'a SampleSet,
        holder_u: &'a UtilityFunction,
        prices: &'a dyn PriceFunctions,
        cfg: &P3Config,
        grid: &GridConfig,
        exec: ExecMode,
    ) -> Result<Self> {
        if cfg.alloc_points == 0 {
            return Err(Error::EmptyGrid("portfolio grid"));
        }
        if cfg.bribe_points == 0 {
            return Err(Error::EmptyGrid("bribe grid"));
        }
        let bribe_grid = (0..cfg.bribe_points)
            .map(|k| k as f64 / cfg.bribe_points as f64)
            .collect();
        Ok(P3Game {
            params,
            samples,
            holder_u,
            prices,
            deltas: grid.deltas()?,
            alloc_steps: cfg.alloc_points - 1,
            lock_grid: unit_grid(grid.n_points)?,
            issue_grid: unit_grid(grid.f_points)?,
            bribe_grid,
            exec,
            er: estimate_values(samples, samples.returns()).value,
        })
    }

    fn alloc(&self, total: f64, i: usize) -> f64 {
        if self.alloc_steps == 0 {
            0.0
        } else {
            total * i as f64 / self.alloc_steps as f64
        }
    }

    pub fn vault_plan(&self, m: &VaultMove) -> VaultPlan {
        let x_g = self.alloc(self.params.x_bar, m.gov);
        let x_c = self.params.x_bar - x_g;
        let n = x_c * self.lock_grid[m.lock];
        VaultPlan {
            x_c,
            x_g,
            n,
            f: self.params.beta * n * self.issue_grid[m.issue],
            gamma_v: self.bribe_grid[m.bribe],
        }
    }

    pub fn holder_plan(&self, m: &HolderMove) -> HolderPlan {
        let y_c = self.alloc(self.params.y_bar, m.col);
        let y_g = self.alloc(self.params.y_bar, m.gov);
        HolderPlan {
            y_c,
            y_g,
            y_s: (self.params.y_bar - y_c - y_g).max(0.0),
            gamma_s: self.bribe_grid[m.bribe],
        }
    }

    pub fn governor_moves(&self) -> Vec<GovernorMove> {
        let mut out = Vec::with_capacity(3 * self.deltas.len());
        // no-attack first, so profitability ties resolve to it
        for delta in 0..self.deltas.len() {
            out.push(GovernorMove {
                delta,
                collusion: Collusion::None,
            });
        }
        for delta in 0..self.deltas.len() {
            for collusion in [Collusion::Vault, Collusion::Holder] {
                out.push(GovernorMove { delta, collusion });
            }
        }
        out
    }

    pub fn vault_moves(&self) -> Vec<VaultMove> {
        let mut out = Vec::new();
        for gov in 0..=self.alloc_steps {
            for lock in 0..self.lock_grid.len() {
                for issue in 0..self.issue_grid.len() {
                    for bribe in 0..self.bribe_grid.len() {
                        out.push(VaultMove {
                            gov,
                            lock,
                            issue,
                            bribe,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn holder_moves(&self) -> Vec<HolderMove> {
        let k = self.alloc_steps;
        let mut out = Vec::new();
        for col in 0..=k {
            for gov in 0..=k - col {
                for bribe in 0..self.bribe_grid.len() {
                    out.push(HolderMove { col, gov, bribe });
                }
            }
        }
        out
    }

    /// Governor objective, or `None` when the collusion choice is infeasible.
    pub fn governor_value(&self, g: &GovernorMove, v: &VaultMove, h: &HolderMove) -> Result<Option<f64>> {
        let p = self.params;
        let vp = self.vault_plan(v);
        let hp = self.holder_plan(h);
        let delta = self.deltas[g.delta];
        let p1 = self.prices.gov_price(vp.x_g, hp.y_g, delta, vp.f);
        let share_v = gov_share(vp.x_g, p1)?;
        let share_s = gov_share(hp.y_g, p1)?;
        let forced_v = share_v >= p.zeta;
        let forced_s = share_s >= p.zeta;
        let open_v = p.epsilon + share_v >= p.zeta;
        let open_s = p.epsilon + share_s >= p.zeta;
        Ok(match g.collusion {
            Collusion::None => (!forced_v && !forced_s).then(|| p.epsilon * (delta * vp.f + p1)),
            Collusion::Vault => (open_v && !forced_s).then(|| vp.gamma_v * (vp.f - vp.x_g) - p.alpha),
            Collusion::Holder => (open_s && !forced_v).then(|| hp.gamma_s * (vp.n - hp.y_g) - p.alpha),
        })
    }

    /// `(objective, participation right-hand side, per-sample payoff)`.
    fn vault_terms(&self, v: &VaultMove, g: &GovernorMove, h: &HolderMove) -> Result<(f64, f64, f64)> {
        let p = self.params;
        let vp = self.vault_plan(v);
        let hp = self.holder_plan(h);
        let delta = self.deltas[g.delta];
        let (d_n, d_v, d_s) = g.collusion.indicators();
        let p1 = self.prices.gov_price(vp.x_g, hp.y_g, delta, vp.f);
        let b = self.prices.stbl_price(vp.f, hp.y_s);
        let gov_term = if d_n == 1 {
            gov_share(vp.x_g, p1)? * (delta * vp.f + p1)
        } else {
            0.0
        };
        let rhs = vp.f * (b * p.b - delta)
            + gov_term
            + f64::from(d_v) * (1.0 - vp.gamma_v) * (vp.f - vp.x_g)
            - f64::from(d_s) * vp.n;
        Ok((vp.x_c * self.er + rhs, rhs, vp.x_c))
    }

    /// Vault objective, or `None` when participation fails.
    pub fn vault_value(&self, v: &VaultMove, g: &GovernorMove, h: &HolderMove) -> Result<Option<f64>> {
        let (objective, rhs, _) = self.vault_terms(v, g, h)?;
        let n = self.vault_plan(v).n;
        Ok((!(n > 0.0 && strictly_better(self.params.u, rhs))).then_some(objective))
    }

    fn holder_payoffs(&self, h: &HolderMove, g: &GovernorMove, v: &VaultMove) -> Result<Vec<f64>> {
        let vp = self.vault_plan(v);
        let hp = self.holder_plan(h);
        let delta = self.deltas[g.delta];
        let (d_n, _, d_s) = g.collusion.indicators();
        let p1 = self.prices.gov_price(vp.x_g, hp.y_g, delta, vp.f);
        let b = self.prices.stbl_price(vp.f, hp.y_s);
        let coins = if hp.y_s == 0.0 {
            0.0
        } else if b > 0.0 {
            hp.y_s / b
        } else {
            return Err(Error::ZeroStablecoinPrice(hp.y_s));
        };
        let dividend = if d_n == 1 {
            gov_share(hp.y_g, p1)? * (delta * vp.f + p1)
        } else {
            0.0
        };
        let bribe = f64::from(d_s) * (1.0 - hp.gamma_s) * (vp.n - hp.y_g);
        Ok(self
            .samples
            .returns()
            .iter()
            .map(|&r| {
                let no_attack = if d_n == 1 {
                    coins.min(vp.n * (1.0 + r) - delta * vp.f).max(0.0) + dividend
                } else {
                    0.0
                };
                hp.y_c * r + no_attack + bribe
            })
            .collect())
    }

    pub fn holder_value(&self, h: &HolderMove, g: &GovernorMove, v: &VaultMove) -> Result<f64> {
        let xs = self.holder_payoffs(h, g, v)?;
        utility_of_values(self.holder_u, self.samples, &xs)
    }

    pub fn governor_best(&self, v: &VaultMove, h: &HolderMove) -> Result<(GovernorMove, f64)> {
        let moves = self.governor_moves();
        let mut best: Option<(GovernorMove, f64)> = None;
        for g in moves {
            if let Some(x) = self.governor_value(&g, v, h)? {
                if best.is_none_or(|(_, b)| strictly_better(x, b)) {
                    best = Some((g, x));
                }
            }
        }
        best.ok_or(Error::InfeasibleCollusion)
    }

    pub fn vault_best(&self, g: &GovernorMove, h: &HolderMove) -> Result<(VaultMove, f64)> {
        let moves = self.vault_moves();
        let values = map_slice(self.exec, &moves, |v| self.vault_value(v, g, h))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut best: Option<(usize, f64)> = None;
        for (i, x) in values.iter().enumerate() {
            if let Some(x) = *x {
                if best.is_none_or(|(_, b)| strictly_better(x, b)) {
                    best = Some((i, x));
                }
            }
        }
        best.map(|(i, x)| (moves[i], x))
            .ok_or(Error::EmptyGrid("no participating vault decision"))
    }

    pub fn holder_best(&self, g: &GovernorMove, v: &VaultMove) -> Result<(HolderMove, f64)> {
        let moves = self.holder_moves();
        let values = map_slice(self.exec, &moves, |h| self.holder_value(h, g, v))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let i = argmax_first(&values).ok_or(Error::EmptyGrid("holder portfolio grid"))?;
        Ok((moves[i], values[i]))
    }
}

/// Best `(delta, collusion)` for the governor given the other two agents.
pub fn outside_gov_choice(game: &P3Game, vault: &VaultMove, holder: &HolderMove) -> Result<GovernorMove> {
    game.governor_best(vault, holder).map(|(g, _)| g)
}

pub fn vault_choice_p3(game: &P3Game, governor: &GovernorMove, holder: &HolderMove) -> Result<VaultMove> {
    game.vault_best(governor, holder).map(|(v, _)| v)
}

pub fn holder_choice_p3(game: &P3Game, governor: &GovernorMove, vault: &VaultMove) -> Result<HolderMove> {
    game.holder_best(governor, vault).map(|(h, _)| h)
}

/// Moves `cur` at least halfway to `target`.
fn damp(cur: usize, target: usize) -> usize {
    if target >= cur {
        cur + (target - cur).div_ceil(2)
    } else {
        cur - (cur - target).div_ceil(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P3Solution {
    pub profile: Profile,
    pub report: EquilibriumReport,
}

pub fn solve_p3(
    params: &ScenarioParams,
    model: &ReturnModel,
    holder_u: &UtilityFunction,
    prices: &dyn PriceFunctions,
    cfg: &P3Config,
    opts: &SolverOptions,
) -> Result<P3Solution> {
    check_inputs(params, model, holder_u)?;
    let samples = SampleSet::build(model, &opts.sampling)?;
    let game = P3Game::new(params, &samples, holder_u, prices, cfg, &opts.grid, opts.exec)?;
    solve_game(&game, opts)
}

/// Damped best-response iteration from the all-zero profile.
pub fn solve_game(game: &P3Game, opts: &SolverOptions) -> Result<P3Solution> {
    let mut state = Profile::default();
    let mut seen: HashMap<Profile, usize> = HashMap::new();
    seen.insert(state, 0);
    let mut converged = false;
    let mut cycle_length = None;
    let mut iterations = 0;

    while iterations < opts.max_iterations.max(1) {
        iterations += 1;
        let before = state;

        let (g, _) = game.governor_best(&state.vault, &state.holder)?;
        state.governor = GovernorMove {
            delta: damp(state.governor.delta, g.delta),
            collusion: g.collusion,
        };

        let (v, _) = game.vault_best(&state.governor, &state.holder)?;
        state.vault = VaultMove {
            gov: damp(state.vault.gov, v.gov),
            lock: damp(state.vault.lock, v.lock),
            issue: damp(state.vault.issue, v.issue),
            bribe: v.bribe,
        };

        let (h, _) = game.holder_best(&state.governor, &state.vault)?;
        let col = damp(state.holder.col, h.col);
        let gov = damp(state.holder.gov, h.gov).min(game.alloc_steps - col);
        state.holder = HolderMove {
            col,
            gov,
            bribe: h.bribe,
        };

        if state == before {
            converged = true;
            break;
        }
        if let Some(&prev) = seen.get(&state) {
            cycle_length = Some(iterations - prev);
            break;
        }
        seen.insert(state, iterations);
    }

    let report = build_report(game, &state, opts, converged, iterations, cycle_length)?;
    Ok(P3Solution {
        profile: state,
        report,
    })
}

fn build_report(
    game: &P3Game,
    s: &Profile,
    opts: &SolverOptions,
    converged: bool,
    iterations: usize,
    cycle_length: Option<usize>,
) -> Result<EquilibriumReport> {
    let vp = game.vault_plan(&s.vault);
    let hp = game.holder_plan(&s.holder);
    let delta = game.deltas[s.governor.delta];
    let p1 = game.prices.gov_price(vp.x_g, hp.y_g, delta, vp.f);
    let (d_n, d_v, d_s) = s.governor.collusion.indicators();
    let governance = game
        .governor_value(&s.governor, &s.vault, &s.holder)?
        .unwrap_or(f64::NAN);
    let (vault, _, x_c) = game.vault_terms(&s.vault, &s.governor, &s.holder)?;
    let vault_se = x_c * estimate_values(game.samples, game.samples.returns()).std_error;
    let holder = game.holder_value(&s.holder, &s.governor, &s.vault)?;
    let p2 = if d_n == 1 { p1 } else { 0.0 };

    Ok(EquilibriumReport {
        problem: Problem::CollusionPortfolio,
        run: run_header(game.samples, opts, game.deltas.len(), game.lock_grid.len()),
        delta_star: delta,
        f_star: vp.f,
        n_star: vp.n,
        b_price: game.prices.stbl_price(vp.f, hp.y_s),
        participates: vp.n > 0.0,
        gov_path: GovTokenPath {
            p0: game.prices.gov_price(0.0, 0.0, delta, vp.f),
            p1,
            p2,
            p2_expected: p2,
        },
        attack: AttackSummary {
            probability: f64::from(1 - d_n),
            d_n: Some(d_n),
            d_v: Some(d_v),
            d_s: Some(d_s),
        },
        bribes: Some(Bribes {
            gamma_v: vp.gamma_v,
            gamma_s: hp.gamma_s,
        }),
        portfolios: Some(Portfolios {
            x_c: vp.x_c,
            x_g: vp.x_g,
            y_c: hp.y_c,
            y_g: hp.y_g,
            y_s: hp.y_s,
        }),
        objectives: Objectives {
            governance,
            vault,
            holder: Some(holder),
        },
        diagnostics: Diagnostics {
            converged,
            iterations,
            cycle_length,
            std_errors: StdErrors {
                governance: 0.0,
                vault: vault_se,
                b_price: 0.0,
            },
        },
    })
}
