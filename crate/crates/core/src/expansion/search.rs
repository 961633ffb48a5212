use std::collections::BTreeMap;

use rayon::prelude::*;

use super::axis::apply_axis;
use super::settings::ExpansionSettings;
use super::solver::{solve_knob, CostModel};
use super::trajectory::{Candidate, ExpansionStep, Trajectory};
use crate::arch::{resolve_input_geometry, Axis, ExpansionFactors};
use crate::criterion::Criterion;
use crate::error::{Error, Result};

/// Called once per accepted step. Regularization changes tied to model
/// size would hook in here; the default does nothing.
pub trait ExpansionHook {
    fn on_step(&mut self, _step: &ExpansionStep, _rejected: &[(Axis, String)]) {}
}

pub struct NoopHook;

impl ExpansionHook for NoopHook {}

/// Axes to evaluate from `f`. While the clip has a single frame, raising
/// the frame rate and raising the frame count produce the same network, so
/// only the temporal axis is evaluated for the pair.
pub fn candidate_axes(f: &ExpansionFactors, settings: &ExpansionSettings) -> Vec<Axis> {
    let single_frame = resolve_input_geometry(f).frames == 1;
    Axis::ALL
        .into_iter()
        .filter(|&a| settings.is_enabled(a))
        .filter(|&a| !(a == Axis::Fast && single_frame && settings.is_enabled(Axis::Temporal)))
        .collect()
}

fn evaluate(f: &ExpansionFactors, axis: Axis, target: u64, criterion: &dyn Criterion, cost: &dyn CostModel) -> Result<Candidate> {
    let sol = solve_knob(f, axis, target, cost)?;
    let factors = apply_axis(f, axis, sol.knob)?;
    let score = criterion.score(&factors)?;
    if !score.is_finite() {
        return Err(Error::Criterion(format!("non-finite score {score}")));
    }
    Ok(Candidate {
        knob: sol.knob,
        cost: cost.flops(&factors)?,
        params: cost.params(&factors)?,
        score,
        factors,
    })
}

/// Highest score, then fewer parameters, then earlier in the tie-break order.
fn better(a: (Axis, &Candidate), b: (Axis, &Candidate), settings: &ExpansionSettings) -> bool {
    if a.1.score != b.1.score {
        return a.1.score > b.1.score;
    }
    if a.1.params != b.1.params {
        return a.1.params < b.1.params;
    }
    settings.tie_rank(a.0) < settings.tie_rank(b.0)
}

pub fn forward_expand(
    start: &ExpansionFactors,
    target_cost: u64,
    criterion: &dyn Criterion,
    cost: &dyn CostModel,
    settings: &ExpansionSettings,
) -> Result<Trajectory> {
    forward_expand_with_hook(start, target_cost, criterion, cost, settings, &mut NoopHook)
}

/// Greedy coordinate ascent: each step scales the cost by `c_hat` along
/// whichever single axis scores best.
pub fn forward_expand_with_hook(
    start: &ExpansionFactors,
    target_cost: u64,
    criterion: &dyn Criterion,
    cost: &dyn CostModel,
    settings: &ExpansionSettings,
    hook: &mut dyn ExpansionHook,
) -> Result<Trajectory> {
    settings.validate()?;
    start.validate()?;
    if settings.max_steps == 0 {
        return Err(Error::InvalidConfig("nothing to expand: max_steps is 0".into()));
    }
    let start_cost = cost.flops(start)?;
    if start_cost >= target_cost {
        return Err(Error::InvalidConfig(format!(
            "nothing to expand: the start already costs {start_cost} >= target {target_cost}"
        )));
    }
    let mut t = Trajectory {
        start: start.clone(),
        start_cost,
        start_params: cost.params(start)?,
        start_score: criterion.score(start).ok(),
        steps: Vec::new(),
        settings: settings.clone(),
        criterion_id: criterion.id(),
    };

    let mut current = start.clone();
    let mut current_cost = start_cost;
    while current_cost < target_cost && t.steps.len() < settings.max_steps {
        let index = t.steps.len() + 1;
        let step_target = (settings.c_hat * current_cost as f64).round() as u64;
        let axes = candidate_axes(&current, settings);
        let run = |&axis: &Axis| (axis, evaluate(&current, axis, step_target, criterion, cost));
        let results: Vec<(Axis, Result<Candidate>)> = if criterion.is_pure() {
            axes.par_iter().map(run).collect()
        } else {
            axes.iter().map(run).collect()
        };

        let mut candidates = BTreeMap::new();
        let mut rejected = Vec::new();
        for (axis, r) in results {
            match r {
                Ok(c) => {
                    candidates.insert(axis, c);
                }
                Err(e) => rejected.push((axis, e.to_string())),
            }
        }
        let Some((axis, chosen)) = candidates
            .iter()
            .reduce(|best, next| if better((*next.0, next.1), (*best.0, best.1), settings) { next } else { best })
            .map(|(a, c)| (*a, c.clone()))
        else {
            return Err(Error::AllAxesFailed {
                step: index,
                reasons: rejected.iter().map(|(a, r)| format!("{a}: {r}")).collect(),
            });
        };
        let step = ExpansionStep {
            index,
            axis,
            knob: chosen.knob,
            factors_after: chosen.factors,
            cost_flops: chosen.cost,
            params: chosen.params,
            score: chosen.score,
            candidates,
        };
        hook.on_step(&step, &rejected);
        current = step.factors_after.clone();
        current_cost = step.cost_flops;
        t.steps.push(step);
    }
    Ok(t)
}
