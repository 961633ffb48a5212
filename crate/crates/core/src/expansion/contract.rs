use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::solver::{cost_at, cost_grid, grid_level_start, level_start, CostModel};
use super::trajectory::Trajectory;
use crate::arch::{Axis, ExpansionFactors};
use crate::error::{Error, Result};

/// Named complexity bound in multiply-adds per clip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Regime {
    XS,
    S,
    M,
    L,
    XL,
    XXL,
}

impl Regime {
    pub const ALL: [Regime; 6] = [Regime::XS, Regime::S, Regime::M, Regime::L, Regime::XL, Regime::XXL];

    pub fn bound_flops(self) -> u64 {
        match self {
            Regime::XS => 600_000_000,
            Regime::S => 2_000_000_000,
            Regime::M => 5_000_000_000,
            Regime::L => 20_000_000_000,
            Regime::XL => 40_000_000_000,
            Regime::XXL => 150_000_000_000,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::XS => "XS",
            Regime::S => "S",
            Regime::M => "M",
            Regime::L => "L",
            Regime::XL => "XL",
            Regime::XXL => "XXL",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase();
        let key = key.strip_prefix("X3D-").unwrap_or(&key);
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == key)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown regime `{s}` (expected XS, S, M, L, XL or XXL)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    pub factors: ExpansionFactors,
    pub axis: Axis,
    pub knob: f64,
    pub cost: u64,
}

/// Largest cost level reachable along `axis` from `prev` with a knob in
/// `[1, k_last]` that stays within `bound`, if it beats `prev_cost`.
fn largest_level_within(
    prev: &ExpansionFactors,
    axis: Axis,
    k_last: f64,
    prev_cost: u64,
    bound: u64,
    cost: &dyn CostModel,
) -> Option<(f64, u64)> {
    let grid = cost_grid(prev, axis, k_last, prev_cost, cost);
    let fits = |c: Option<u64>| c.is_some_and(|c| c <= bound);
    let over = grid.iter().position(|&(_, c)| !fits(c));
    let Some(e) = over else {
        let last = grid.len() - 1;
        let level = grid[last].1?;
        return (level > prev_cost).then(|| (grid_level_start(prev, axis, cost, &grid, last), level));
    };
    if e == 0 {
        return None;
    }
    let (mut lo, mut hi) = (grid[e - 1].0, grid[e].0);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fits(cost_at(prev, axis, mid, cost)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let level = cost_at(prev, axis, lo, cost)?;
    if level <= prev_cost {
        return None;
    }
    let knob = if grid[e - 1].1 == Some(level) {
        grid_level_start(prev, axis, cost, &grid, e - 1)
    } else {
        level_start(prev, axis, cost, grid[e - 1].0, lo, level)
    };
    Some((knob, level))
}

/// Shrink the knob of the last step so that its cost is as large as
/// possible without exceeding `target`. When no such knob improves on the
/// previous point, up to `target * (1 + epsilon)` is accepted.
pub fn backward_contract(t: &Trajectory, target: u64, cost: &dyn CostModel, epsilon: f64) -> Result<Contraction> {
    let last = t.steps.last().ok_or_else(|| Error::Contraction("the trajectory has no steps".into()))?;
    if target >= last.cost_flops {
        return Ok(Contraction {
            factors: last.factors_after.clone(),
            axis: last.axis,
            knob: last.knob,
            cost: last.cost_flops,
        });
    }
    let prev_index = t.steps.len() - 1;
    let prev = t.factors_at(prev_index);
    let prev_cost = t.cost_at(prev_index);
    if target < prev_cost {
        return Err(Error::Contraction(format!("target {target} is below the previous point's cost {prev_cost}")));
    }
    let relaxed = (target as f64 * (1.0 + epsilon)).floor() as u64;
    for bound in [target, relaxed] {
        if let Some((knob, level)) = largest_level_within(prev, last.axis, last.knob, prev_cost, bound, cost) {
            return Ok(Contraction {
                factors: super::axis::apply_axis(prev, last.axis, knob)?,
                axis: last.axis,
                knob,
                cost: level,
            });
        }
    }
    Err(Error::Contraction(format!(
        "no knob along {} lands in ({prev_cost}, {relaxed}]",
        last.axis
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectionSource {
    /// A trajectory point used as is.
    Kept { point: usize },
    /// The step after `point`, contracted to the bound.
    Contracted { point: usize, knob: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub factors: ExpansionFactors,
    pub cost: u64,
    pub source: SelectionSource,
}

/// Instance for a cost bound: the largest trajectory point within it, or
/// the following step contracted to the bound when that fits better.
pub fn select_instance(t: &Trajectory, bound: u64, cost: &dyn CostModel, epsilon: f64) -> Result<Selection> {
    if bound < t.start_cost {
        return Err(Error::Contraction(format!("bound {bound} is below the start cost {}", t.start_cost)));
    }
    let costs = t.costs();
    let kept = (0..costs.len()).rev().find(|&i| costs[i] <= bound).unwrap_or(0);
    let keep = Selection {
        factors: t.factors_at(kept).clone(),
        cost: costs[kept],
        source: SelectionSource::Kept { point: kept },
    };
    if kept + 1 == costs.len() || costs[kept] == bound {
        return Ok(keep);
    }
    match backward_contract(&t.truncated(kept + 1), bound, cost, epsilon) {
        Ok(c) if c.cost <= bound && c.cost > keep.cost => Ok(Selection {
            factors: c.factors,
            cost: c.cost,
            source: SelectionSource::Contracted { point: kept, knob: c.knob },
        }),
        _ => Ok(keep),
    }
}
