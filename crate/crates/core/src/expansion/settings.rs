use serde::{Deserialize, Serialize};

use crate::arch::Axis;
use crate::error::{Error, Result};

/// Relative slack allowed between a step's achieved cost and its target
/// once widths, depths and frame counts have been rounded.
pub const MATCH_TOLERANCE: f64 = 0.2;

/// Order used to break score and parameter ties between candidates.
pub const DEFAULT_TIE_BREAK: [Axis; 6] = [
    Axis::Bottleneck,
    Axis::Temporal,
    Axis::Fast,
    Axis::Spatial,
    Axis::Depth,
    Axis::Width,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionSettings {
    /// Per-step cost multiplier.
    pub c_hat: f64,
    /// Relative overshoot tolerated by backward contraction.
    pub epsilon: f64,
    pub enabled_axes: Vec<Axis>,
    pub tie_break: Vec<Axis>,
    pub max_steps: usize,
}

impl Default for ExpansionSettings {
    fn default() -> Self {
        Self {
            c_hat: 2.0,
            epsilon: 0.05,
            enabled_axes: Axis::ALL.to_vec(),
            tie_break: DEFAULT_TIE_BREAK.to_vec(),
            max_steps: 20,
        }
    }
}

impl ExpansionSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.c_hat.is_finite() && self.c_hat > 1.0) {
            return bad(format!("c_hat must exceed 1, got {}", self.c_hat));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return bad(format!("epsilon must lie in (0, 0.5), got {}", self.epsilon));
        }
        if self.enabled_axes.is_empty() {
            return bad("no expansion axis is enabled".into());
        }
        for (i, a) in self.enabled_axes.iter().enumerate() {
            if self.enabled_axes[..i].contains(a) {
                return bad(format!("axis {a} is enabled twice"));
            }
        }
        let mut order = self.tie_break.clone();
        order.sort();
        if order != Axis::ALL {
            return bad("tie_break must list each of the six axes exactly once".into());
        }
        Ok(())
    }

    pub fn is_enabled(&self, axis: Axis) -> bool {
        self.enabled_axes.contains(&axis)
    }

    pub fn tie_rank(&self, axis: Axis) -> usize {
        self.tie_break.iter().position(|&a| a == axis).unwrap_or(usize::MAX)
    }
}
