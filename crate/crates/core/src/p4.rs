//! Miner-absorbed stablecoin simulation.
//!
//! Each round the holder rebalances between STBL and an exogenous stablecoin,
//! the protocol picks the block reward `r >= 0` that keeps STBL closest to 1
//! assuming the block is mined, the miner decides whether to mine, and the
//! price settles. Supply grows by `r d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{strictly_better, unit_grid};
use crate::model::{ReturnModel, UtilityFunction};
use crate::p1::check_inputs;
use crate::params::ScenarioParams;
use crate::stochastics::{utility_of_values, SampleSet, SamplingConfig};

/// Inputs to the STBL price after a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceInputs {
    pub r: f64,
    /// STBL coins held before rebalancing.
    pub y0_s: f64,
    /// STBL coins held after rebalancing.
    pub y1_s: f64,
    pub d: u8,
    pub p1: f64,
    /// Outstanding supply before this block.
    pub supply: f64,
}

pub trait P4PriceModel: Sync {
    /// Non-increasing in `r`, non-decreasing in `y1_s`.
    fn price(&self, inputs: &PriceInputs) -> f64;
    /// Long-run confidence `P1`; non-decreasing in `d`.
    fn confidence(&self, y_s: f64, d: u8) -> f64;
}

/// Linear demand pressure against issuance, both scaled by supply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearP4Prices {
    pub lambda_demand: f64,
    pub lambda_reward: f64,
    /// Fraction of the block reward miners put on the market.
    pub spend_frac: f64,
    pub confidence_per_coin: f64,
}

impl Default for LinearP4Prices {
    fn default() -> Self {
        LinearP4Prices {
            lambda_demand: 1.0,
            lambda_reward: 1.0,
            spend_frac: 1.0,
            confidence_per_coin: 1.0,
        }
    }
}

impl P4PriceModel for LinearP4Prices {
    fn price(&self, x: &PriceInputs) -> f64 {
        let scale = x.supply.max(1.0);
        let issued = self.spend_frac * x.r * f64::from(x.d);
        (1.0 + self.lambda_demand * (x.y1_s - x.y0_s) / scale - self.lambda_reward * issued / scale).max(0.0)
    }

    fn confidence(&self, y_s: f64, d: u8) -> f64 {
        self.confidence_per_coin * y_s * f64::from(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderPortfolioP4 {
    /// STBL coins.
    pub y_s: f64,
    /// Exogenous stablecoin, in its own units.
    pub y_a: f64,
}

/// `r` on `[0, r_max]` with `points` nodes.
pub fn reward_grid(r_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(r_max.is_finite() && r_max >= 0.0) {
        return Err(Error::EmptyGrid("reward ceiling must be finite and non-negative"));
    }
    Ok(unit_grid(points)?.into_iter().map(|g| g * r_max).collect())
}

/// Grid `r` minimizing `|B(r, y1, 1, p1) - 1|`; ties go to the smaller reward.
pub fn issuance_optimize(model: &dyn P4PriceModel, inputs: &PriceInputs, r_grid: &[f64]) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &r in r_grid {
        let b = model.price(&PriceInputs { r, d: 1, ..*inputs });
        let gap = (b - 1.0).abs();
        if best.is_none_or(|(_, g)| strictly_better(-gap, -g)) {
            best = Some((r, gap));
        }
    }
    best.map(|(r, _)| r).ok_or(Error::EmptyGrid("reward grid"))
}

/// 1 when mining pays for itself and beats the outside option.
pub fn miner_decision(b_price: f64, b_rate: f64, r: f64, c: f64, _p1: f64, u_outside: f64) -> u8 {
    let profit = b_price * b_rate * r - c;
    u8::from(profit >= 0.0 && profit >= u_outside)
}

/// Rebalances the holder between STBL and the exogenous coin.
///
/// Sales yield `b_now (1 - delta)` per coin, purchases cost `b_now / (1 - delta)`
/// and are funded from `y_a`. Kept coins are worth `b_now (1 + R)` next block.
/// The current holding is evaluated first so indifference keeps it.
pub fn holder_rebalance(
    y0: &HolderPortfolioP4,
    b_now: f64,
    b_a: f64,
    delta_cost: f64,
    holder_u: &UtilityFunction,
    samples: &SampleSet,
    points: usize,
) -> Result<HolderPortfolioP4> {
    let max_buy = if b_now > 0.0 {
        y0.y_a * b_a * (1.0 - delta_cost) / b_now
    } else {
        0.0
    };
    let mut candidates = vec![y0.y_s];
    candidates.extend(unit_grid(points)?.into_iter().map(|g| g * (y0.y_s + max_buy)));

    let after = |y1: f64| {
        let cash = if y1 <= y0.y_s {
            (y0.y_s - y1) * b_now * (1.0 - delta_cost)
        } else {
            -(y1 - y0.y_s) * b_now / (1.0 - delta_cost)
        };
        HolderPortfolioP4 {
            y_s: y1,
            y_a: (y0.y_a + cash / b_a).max(0.0),
        }
    };

    let mut best: Option<(HolderPortfolioP4, f64)> = None;
    for y1 in candidates {
        let next = after(y1);
        let xs: Vec<f64> = samples
            .returns()
            .iter()
            .map(|r| next.y_s * b_now * (1.0 + r) + next.y_a * b_a)
            .collect();
        let v = utility_of_values(holder_u, samples, &xs)?;
        if best.is_none_or(|(_, b)| strictly_better(v, b)) {
            best = Some((next, v));
        }
    }
    best.map(|(y, _)| y).ok_or(Error::EmptyGrid("rebalance grid"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct P4Config {
    pub prices: LinearP4Prices,
    /// Holder's belief about the one-block STBL return.
    pub expectation: ReturnModel,
    pub initial_stbl: f64,
    pub initial_alt: f64,
    /// Exogenous coins added to the holder each round.
    pub alt_inflow: f64,
    pub initial_supply: f64,
    pub alt_price: f64,
    pub r_max: f64,
    pub r_points: usize,
    pub rebalance_points: usize,
}

impl Default for P4Config {
    fn default() -> Self {
        P4Config {
            prices: LinearP4Prices::default(),
            expectation: ReturnModel::Deterministic { value: 0.0 },
            initial_stbl: 100.0,
            initial_alt: 100.0,
            alt_inflow: 0.0,
            initial_supply: 100.0,
            alt_price: 1.0,
            r_max: 100.0,
            r_points: 10_001,
            rebalance_points: 101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P4Round {
    pub round: usize,
    pub r: f64,
    pub d: u8,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "P1")]
    pub p1: f64,
    pub y_s: f64,
    pub y_a: f64,
    #[serde(rename = "F")]
    pub f: f64,
}

pub fn simulate_p4(
    params: &ScenarioParams,
    model: &dyn P4PriceModel,
    cfg: &P4Config,
    holder_u: &UtilityFunction,
    rounds: usize,
    sampling: &SamplingConfig,
) -> Result<Vec<P4Round>> {
    check_inputs(params, &cfg.expectation, holder_u)?;
    if !(cfg.alt_price > 0.0) {
        return Err(Error::DivisionByZero("alt_price"));
    }
    let r_grid = reward_grid(cfg.r_max, cfg.r_points)?;
    let mut y = HolderPortfolioP4 {
        y_s: cfg.initial_stbl,
        y_a: cfg.initial_alt,
    };
    let mut supply = cfg.initial_supply;
    let mut b_now = 1.0;
    let mut out = Vec::with_capacity(rounds);

    for round in 1..=rounds {
        y.y_a += cfg.alt_inflow;
        let round_sampling = SamplingConfig {
            seed: sampling.seed.wrapping_add(round as u64),
            ..*sampling
        };
        let samples = SampleSet::build(&cfg.expectation, &round_sampling)?;
        let y1 = holder_rebalance(
            &y,
            b_now,
            cfg.alt_price,
            params.delta_cost,
            holder_u,
            &samples,
            cfg.rebalance_points,
        )?;

        let assumed = PriceInputs {
            r: 0.0,
            y0_s: y.y_s,
            y1_s: y1.y_s,
            d: 1,
            p1: model.confidence(y1.y_s, 1),
            supply,
        };
        let r = issuance_optimize(model, &assumed, &r_grid)?;
        let b_if_mined = model.price(&PriceInputs { r, ..assumed });
        let d = miner_decision(b_if_mined, params.b, r, params.c, assumed.p1, params.u_holder);
        let p1 = model.confidence(y1.y_s, d);
        let b = model.price(&PriceInputs { r, d, p1, ..assumed });
        supply += r * f64::from(d);

        out.push(P4Round {
            round,
            r,
            d,
            b,
            p1,
            y_s: y1.y_s,
            y_a: y1.y_a,
            f: supply,
        });
        y = y1;
        b_now = b;
    }
    Ok(out)
}
