use serde::{Deserialize, Serialize};

use crate::exec::ExecMode;
use crate::grid::GridConfig;
use crate::stochastics::SamplingConfig;

/// Move order between governance and the vault.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Timing {
    /// Governance commits to a rate, the vault responds (Stackelberg).
    #[default]
    Sequential,
    /// Simultaneous moves; a pure Nash point is sought by best-response iteration.
    Concurrent,
}

impl Timing {
    pub fn as_str(self) -> &'static str {
        match self {
            Timing::Sequential => "sequential",
            Timing::Concurrent => "concurrent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub grid: GridConfig,
    pub sampling: SamplingConfig,
    pub exec: ExecMode,
    pub timing: Timing,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            grid: GridConfig::default(),
            sampling: SamplingConfig::default(),
            exec: ExecMode::default(),
            timing: Timing::default(),
            max_iterations: 200,
        }
    }
}
