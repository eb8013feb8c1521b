//! Seeded return sampling and expectation estimates.
//!
//! A [`SampleSet`] is drawn once per solver call and shared by every
//! candidate decision (common random numbers), so comparisons between
//! candidates never see independent noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ReturnModel, UtilityFunction};

pub const DEFAULT_SAMPLE_COUNT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// Exhaustive enumeration for finite-support models, Monte Carlo otherwise.
    #[default]
    Auto,
    MonteCarlo,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub count: usize,
    pub seed: u64,
    pub mode: SamplingMode,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            count: DEFAULT_SAMPLE_COUNT,
            seed: 0,
            mode: SamplingMode::Auto,
        }
    }
}

/// Realizations of `R` with their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    seed: u64,
    returns: Vec<f64>,
    probs: Vec<f64>,
    exact: bool,
}

impl SampleSet {
    pub fn build(model: &ReturnModel, cfg: &SamplingConfig) -> Result<SampleSet> {
        match cfg.mode {
            SamplingMode::MonteCarlo => draw_returns(model, cfg.count, cfg.seed),
            SamplingMode::Exhaustive => enumerate_returns(model, cfg.seed),
            SamplingMode::Auto => match model.support() {
                Some(_) => enumerate_returns(model, cfg.seed),
                None => draw_returns(model, cfg.count, cfg.seed),
            },
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn count(&self) -> usize {
        self.returns.len()
    }

    /// True when the set enumerates the full support with exact probabilities.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.returns.iter().copied().zip(self.probs.iter().copied())
    }

    /// Weighted mean of `values` (one per sample).
    pub(crate) fn mean_of(&self, values: &[f64]) -> f64 {
        if self.exact {
            values.iter().zip(&self.probs).map(|(x, p)| p * x).sum()
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    }

    /// Plug-in variance of `values` around `mean`.
    pub(crate) fn variance_of(&self, values: &[f64], mean: f64) -> f64 {
        if self.exact {
            values
                .iter()
                .zip(&self.probs)
                .map(|(x, p)| p * (x - mean) * (x - mean))
                .sum()
        } else {
            values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / values.len() as f64
        }
    }

    /// Probability mass of samples where `pred` holds.
    pub fn probability(&self, mut pred: impl FnMut(usize, f64) -> bool) -> f64 {
        let mut mass = 0.0;
        for (i, (r, p)) in self.iter().enumerate() {
            if pred(i, r) {
                mass += if self.exact { p } else { 1.0 };
            }
        }
        if self.exact {
            mass
        } else {
            mass / self.count() as f64
        }
    }
}

/// Monte Carlo draw of `count` realizations, bit-identical for a given seed.
pub fn draw_returns(model: &ReturnModel, count: usize, seed: u64) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::EmptySampleSet);
    }
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let returns = match model {
        ReturnModel::Deterministic { value } => vec![*value; count],
        ReturnModel::Discrete { values, probs } => {
            let mut cumulative = Vec::with_capacity(probs.len());
            let mut acc = 0.0;
            for p in probs {
                acc += p;
                cumulative.push(acc);
            }
            (0..count)
                .map(|_| {
                    let u: f64 = rng.random::<f64>() * acc;
                    let i = cumulative
                        .iter()
                        .position(|&c| u < c)
                        .unwrap_or(values.len() - 1);
                    values[i]
                })
                .collect()
        }
        ReturnModel::Lognormal { log_mean, log_sd } => {
            let normal = Normal::new(*log_mean, *log_sd)
                .map_err(|e| Error::Estimation(format!("lognormal parameters: {e}")))?;
            (0..count).map(|_| normal.sample(&mut rng).exp() - 1.0).collect()
        }
    };
    Ok(SampleSet {
        seed,
        probs: vec![1.0 / count as f64; count],
        returns,
        exact: false,
    })
}

/// The full support of a finite model with its exact probabilities.
pub fn enumerate_returns(model: &ReturnModel, seed: u64) -> Result<SampleSet> {
    model.validate()?;
    let (returns, probs) = model.support().ok_or(Error::NotEnumerable)?;
    Ok(SampleSet {
        seed,
        returns,
        probs,
        exact: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

fn payoffs(samples: &SampleSet, payoff: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    if samples.count() == 0 {
        return Err(Error::EmptySampleSet);
    }
    samples
        .returns
        .iter()
        .enumerate()
        .map(|(index, &r)| {
            let x = payoff(r);
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::NonFinitePayoff { index, sample: r })
            }
        })
        .collect()
}

fn constant(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    values.iter().all(|&x| x == first).then_some(first)
}

/// Sample mean of `payoff(R)` with its standard error (zero for exact sets).
pub fn expected_value(samples: &SampleSet, payoff: impl Fn(f64) -> f64) -> Result<Estimate> {
    let xs = payoffs(samples, payoff)?;
    Ok(estimate_values(samples, &xs))
}

pub(crate) fn estimate_values(samples: &SampleSet, xs: &[f64]) -> Estimate {
    if let Some(c) = constant(xs) {
        return Estimate {
            value: c,
            std_error: 0.0,
        };
    }
    let mean = samples.mean_of(xs);
    let std_error = if samples.exact || xs.len() < 2 {
        0.0
    } else {
        let n = xs.len() as f64;
        let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    };
    Estimate {
        value: mean,
        std_error,
    }
}

/// Expected utility of `payoff(R)` under `utility`.
///
/// Mean-variance preferences use the plug-in mean and variance of the payoff
/// distribution regardless of its shape.
pub fn expected_utility(
    utility: &UtilityFunction,
    samples: &SampleSet,
    payoff: impl Fn(f64) -> f64,
) -> Result<f64> {
    let xs = payoffs(samples, payoff)?;
    utility_of_values(utility, samples, &xs)
}

pub(crate) fn utility_of_values(
    utility: &UtilityFunction,
    samples: &SampleSet,
    xs: &[f64],
) -> Result<f64> {
    match *utility {
        UtilityFunction::RiskNeutral => Ok(estimate_values(samples, xs).value),
        UtilityFunction::MeanVariance { rho } => {
            if let Some(c) = constant(xs) {
                return Ok(c);
            }
            let mean = samples.mean_of(xs);
            Ok(mean - rho * samples.variance_of(xs, mean) / 2.0)
        }
        UtilityFunction::Cara { .. } | UtilityFunction::Hara { .. } => {
            let us = xs
                .iter()
                .map(|&x| utility.eval(x))
                .collect::<Result<Vec<_>>>()?;
            Ok(estimate_values(samples, &us).value)
        }
    }
}
