//! Decision grids and the shared tie-breaking rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance under which two objective values count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// True when `candidate` beats `incumbent` by more than the tie tolerance.
pub fn strictly_better(candidate: f64, incumbent: f64) -> bool {
    let scale = 1f64.max(candidate.abs()).max(incumbent.abs());
    candidate > incumbent + TIE_TOL * scale
}

/// Index of the first maximizer; later entries must be strictly better to win.
pub fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) if strictly_better(v, values[b]) => best = Some(i),
            _ => {}
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Spacing of the interest-rate grid `{0, step, 2 step, ...} ⊂ [0, 1)`.
    pub delta_step: f64,
    /// Points on the face-value grid `[0, beta N]`.
    pub f_points: usize,
    /// Points on the locked-collateral grid `[0, N̄]`.
    pub n_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            delta_step: 0.01,
            f_points: 21,
            n_points: 11,
        }
    }
}

impl GridConfig {
    pub fn deltas(&self) -> Result<Vec<f64>> {
        delta_grid(self.delta_step)
    }
}

/// `{k / K : k = 0..K}` with `K = round(1 / step)`; the grid stays inside `[0, 1)`.
pub fn delta_grid(step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(Error::EmptyGrid("delta step must lie in (0, 1]"));
    }
    let k = (1.0 / step).round() as usize;
    if k == 0 {
        return Err(Error::EmptyGrid("delta step too large"));
    }
    Ok((0..k).map(|i| i as f64 / k as f64).collect())
}

/// `{j / (points - 1)}` over `[0, 1]`.
pub fn unit_grid(points: usize) -> Result<Vec<f64>> {
    match points {
        0 => Err(Error::EmptyGrid("grid needs at least one point")),
        1 => Ok(vec![0.0]),
        _ => Ok((0..points)
            .map(|j| j as f64 / (points - 1) as f64)
            .collect()),
    }
}
