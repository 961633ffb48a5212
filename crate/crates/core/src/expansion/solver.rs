use serde::{Deserialize, Serialize};

use super::axis::{apply_axis, knob_limit};
use super::settings::MATCH_TOLERANCE;
use crate::arch::{instantiate, ArchConfig, Axis, ExpansionFactors};
use crate::cost::report;
use crate::error::{Error, Result};

pub const GRID_POINTS: usize = 64;
const BISECT_ITERS: usize = 64;
const SNAP_DECIMALS: i32 = 9;

/// Complexity of a factor set. Implemented for plain closures returning a
/// cost (their parameter count is reported as zero).
pub trait CostModel: Sync {
    fn flops(&self, f: &ExpansionFactors) -> Result<u64>;

    fn params(&self, _f: &ExpansionFactors) -> Result<u64> {
        Ok(0)
    }
}

impl<F> CostModel for F
where
    F: Fn(&ExpansionFactors) -> Result<u64> + Sync,
{
    fn flops(&self, f: &ExpansionFactors) -> Result<u64> {
        self(f)
    }
}

/// Analytical multiply-adds and parameters of the instantiated network.
#[derive(Clone, Debug, Default)]
pub struct ArchCost {
    pub config: ArchConfig,
}

impl ArchCost {
    pub fn new(config: ArchConfig) -> Self {
        Self { config }
    }
}

impl CostModel for ArchCost {
    fn flops(&self, f: &ExpansionFactors) -> Result<u64> {
        Ok(report(&instantiate(f, &self.config)?)?.flops_madds)
    }

    fn params(&self, f: &ExpansionFactors) -> Result<u64> {
        Ok(report(&instantiate(f, &self.config)?)?.params)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnobSolution {
    pub knob: f64,
    pub cost: u64,
}

pub(crate) fn cost_at(f: &ExpansionFactors, axis: Axis, knob: f64, cost: &dyn CostModel) -> Option<u64> {
    apply_axis(f, axis, knob).ok().and_then(|g| cost.flops(&g).ok())
}

/// `GRID_POINTS` knobs spread linearly over `[1, k_max]` with their costs;
/// knobs whose factors cannot be instantiated have no cost.
pub(crate) fn cost_grid(f: &ExpansionFactors, axis: Axis, k_max: f64, base: u64, cost: &dyn CostModel) -> Vec<(f64, Option<u64>)> {
    (0..GRID_POINTS)
        .map(|i| {
            let k = 1.0 + (k_max - 1.0) * i as f64 / (GRID_POINTS - 1) as f64;
            (k, if i == 0 { Some(base) } else { cost_at(f, axis, k, cost) })
        })
        .collect()
}

/// Smallest knob in `(lo, hi]` whose cost equals `level`, given that `lo`
/// is outside the level and `hi` inside it. The result is reported with
/// the fewest decimals that still reach the level.
pub(crate) fn level_start(f: &ExpansionFactors, axis: Axis, cost: &dyn CostModel, mut lo: f64, mut hi: f64, level: u64) -> f64 {
    let upper = hi;
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cost_at(f, axis, mid, cost) == Some(level) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    for d in 0..=SNAP_DECIMALS {
        let s = 10f64.powi(d);
        for c in [(hi * s).round() / s, (hi * s).ceil() / s] {
            if c > lo && c <= upper && cost_at(f, axis, c, cost) == Some(level) {
                return c;
            }
        }
    }
    hi
}

/// Knob on the first grid point of the run of equal costs ending at `idx`,
/// refined down to the start of that cost level.
pub(crate) fn grid_level_start(f: &ExpansionFactors, axis: Axis, cost: &dyn CostModel, grid: &[(f64, Option<u64>)], idx: usize) -> f64 {
    let level = grid[idx].1;
    let mut j = idx;
    while j > 0 && grid[j - 1].1 == level {
        j -= 1;
    }
    match (j, level) {
        (0, _) | (_, None) => grid[j].0,
        (_, Some(l)) => level_start(f, axis, cost, grid[j - 1].0, grid[j].0, l),
    }
}

fn log_distance(cost: u64, target: u64) -> f64 {
    (cost as f64 / target as f64).ln().abs()
}

/// Knob along `axis` whose rounded architecture comes closest to
/// `target` multiply-adds (in log ratio). Ties go to the smaller knob.
pub fn solve_knob(f: &ExpansionFactors, axis: Axis, target: u64, cost: &dyn CostModel) -> Result<KnobSolution> {
    let base = cost.flops(f)?;
    if target <= base {
        return Err(Error::InvalidConfig(format!("target {target} does not exceed the current cost {base}")));
    }
    let ratio = target as f64 / base as f64;
    let mut k_max = (ratio * ratio).max(2.0);
    if let Some(limit) = knob_limit(f, axis) {
        k_max = k_max.min(limit);
    }
    let infeasible = |reason: String| Err(Error::InfeasibleAxis { axis, reason });
    if k_max <= 1.0 {
        return infeasible("no room left to expand".into());
    }
    let grid = cost_grid(f, axis, k_max, base, cost);

    // closest level from above and from below, earliest grid point on ties
    let mut above: Option<(usize, u64)> = None;
    let mut below: Option<(usize, u64)> = None;
    for (i, &(_, c)) in grid.iter().enumerate() {
        let Some(c) = c.filter(|&c| c > base) else { continue };
        if c >= target {
            if above.is_none_or(|(_, a)| c < a) {
                above = Some((i, c));
            }
        } else if below.is_none_or(|(_, b)| c > b) {
            below = Some((i, c));
        }
    }
    let (idx, level) = match (below, above) {
        (None, None) => return infeasible(format!("no knob up to {k_max:.3} changes the cost")),
        (Some(b), None) => b,
        (None, Some(a)) => a,
        (Some(b), Some(a)) => {
            let (db, da) = (log_distance(b.1, target), log_distance(a.1, target));
            if db < da || (db == da && b.0 < a.0) {
                b
            } else {
                a
            }
        }
    };
    if (level as f64 / target as f64 - 1.0).abs() > MATCH_TOLERANCE {
        return infeasible(format!(
            "closest reachable cost {level} is more than {:.0}% from the target {target}",
            MATCH_TOLERANCE * 100.0
        ));
    }
    let knob = grid_level_start(f, axis, cost, &grid, idx);
    Ok(KnobSolution { knob, cost: level })
}
