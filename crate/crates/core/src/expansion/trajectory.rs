use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::settings::ExpansionSettings;
use crate::arch::{resolve_input_geometry, Axis, ExpansionFactors};
use crate::error::{Error, Result};

/// One evaluated single-axis expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub knob: f64,
    pub factors: ExpansionFactors,
    pub cost: u64,
    pub params: u64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionStep {
    /// 1-based step number.
    pub index: usize,
    pub axis: Axis,
    pub knob: f64,
    pub factors_after: ExpansionFactors,
    pub cost_flops: u64,
    pub params: u64,
    pub score: f64,
    /// Every candidate that could be evaluated, the chosen one included.
    pub candidates: BTreeMap<Axis, Candidate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: ExpansionFactors,
    pub start_cost: u64,
    pub start_params: u64,
    /// `None` when the criterion cannot score the starting point.
    pub start_score: Option<f64>,
    pub steps: Vec<ExpansionStep>,
    pub settings: ExpansionSettings,
    pub criterion_id: String,
}

impl Trajectory {
    /// Number of points including the start.
    pub fn len(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Factors at point `i`; point 0 is the start.
    pub fn factors_at(&self, i: usize) -> &ExpansionFactors {
        if i == 0 {
            &self.start
        } else {
            &self.steps[i - 1].factors_after
        }
    }

    pub fn cost_at(&self, i: usize) -> u64 {
        if i == 0 {
            self.start_cost
        } else {
            self.steps[i - 1].cost_flops
        }
    }

    pub fn costs(&self) -> Vec<u64> {
        (0..self.len()).map(|i| self.cost_at(i)).collect()
    }

    pub fn final_factors(&self) -> &ExpansionFactors {
        self.factors_at(self.steps.len())
    }

    pub fn final_cost(&self) -> u64 {
        self.cost_at(self.steps.len())
    }

    /// Chosen axis of every step, in order.
    pub fn axes(&self) -> Vec<Axis> {
        self.steps.iter().map(|s| s.axis).collect()
    }

    /// First `steps` steps only.
    pub fn truncated(&self, steps: usize) -> Trajectory {
        let mut t = self.clone();
        t.steps.truncate(steps);
        t
    }

    /// Rows: the start (step 0, axis `start`), then per step the chosen
    /// expansion followed by the other candidates flagged `candidate = 1`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.serialize(Row::new(0, "start", 1.0, &self.start, self.start_cost, self.start_params, self.start_score, false))?;
        for s in &self.steps {
            w.serialize(Row::new(s.index, s.axis.name(), s.knob, &s.factors_after, s.cost_flops, s.params, Some(s.score), false))?;
            for (axis, c) in s.candidates.iter().filter(|(a, _)| **a != s.axis) {
                w.serialize(Row::new(s.index, axis.name(), c.knob, &c.factors, c.cost, c.params, Some(c.score), true))?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::malformed("trajectory", e.to_string()))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn from_csv<R: Read>(input: R, settings: ExpansionSettings, criterion_id: impl Into<String>) -> Result<Self> {
        let bad = |m: String| Error::malformed("trajectory", m);
        let rows: Vec<Row> = csv::Reader::from_reader(input).deserialize().collect::<std::result::Result<_, _>>()?;
        let (first, rest) = rows.split_first().ok_or_else(|| bad("no rows".into()))?;
        if first.step != 0 || first.axis != "start" || first.candidate != 0 {
            return Err(bad("the first row must be the step-0 start row".into()));
        }
        let mut t = Trajectory {
            start: first.factors(),
            start_cost: first.flops,
            start_params: first.params,
            start_score: first.score,
            steps: Vec::new(),
            settings,
            criterion_id: criterion_id.into(),
        };
        for r in rest {
            let axis: Axis = r.axis.parse().map_err(|_| bad(format!("unknown axis `{}` at step {}", r.axis, r.step)))?;
            let score = r.score.ok_or_else(|| bad(format!("step {} has no score", r.step)))?;
            let cand = Candidate { knob: r.knob, factors: r.factors(), cost: r.flops, params: r.params, score };
            match r.candidate {
                0 => {
                    if r.step != t.steps.len() + 1 {
                        return Err(bad(format!("expected step {}, found {}", t.steps.len() + 1, r.step)));
                    }
                    t.steps.push(ExpansionStep {
                        index: r.step,
                        axis,
                        knob: r.knob,
                        factors_after: cand.factors.clone(),
                        cost_flops: r.flops,
                        params: r.params,
                        score,
                        candidates: BTreeMap::from([(axis, cand)]),
                    });
                }
                1 => {
                    let step = t
                        .steps
                        .last_mut()
                        .filter(|s| s.index == r.step)
                        .ok_or_else(|| bad(format!("candidate row for step {} precedes its chosen row", r.step)))?;
                    if step.candidates.insert(axis, cand).is_some() {
                        return Err(bad(format!("axis {axis} listed twice at step {}", r.step)));
                    }
                }
                other => return Err(bad(format!("candidate flag must be 0 or 1, got {other}"))),
            }
        }
        Ok(t)
    }

    pub fn load_csv(path: &Path, settings: ExpansionSettings, criterion_id: impl Into<String>) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(std::io::BufReader::new(file), settings, criterion_id)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    step: usize,
    axis: String,
    knob: f64,
    gamma_tau: f64,
    gamma_t: f64,
    gamma_s: f64,
    gamma_w: f64,
    gamma_b: f64,
    gamma_d: f64,
    frames: usize,
    stride: usize,
    resolution: usize,
    flops: u64,
    params: u64,
    score: Option<f64>,
    candidate: u8,
    cum_fast: f64,
    cum_temporal: f64,
    cum_spatial: f64,
    cum_width: f64,
    cum_bottleneck: f64,
    cum_depth: f64,
    resolution_override: Option<usize>,
}

impl Row {
    #[allow(clippy::too_many_arguments)]
    fn new(step: usize, axis: &str, knob: f64, f: &ExpansionFactors, flops: u64, params: u64, score: Option<f64>, candidate: bool) -> Self {
        let g = resolve_input_geometry(f);
        Row {
            step,
            axis: axis.to_string(),
            knob,
            gamma_tau: f.gamma_tau,
            gamma_t: f.gamma_t,
            gamma_s: f.gamma_s,
            gamma_w: f.gamma_w,
            gamma_b: f.gamma_b,
            gamma_d: f.gamma_d,
            frames: g.frames,
            stride: g.stride,
            resolution: g.resolution,
            flops,
            params,
            score,
            candidate: candidate as u8,
            cum_fast: f.cumulative(Axis::Fast),
            cum_temporal: f.cumulative(Axis::Temporal),
            cum_spatial: f.cumulative(Axis::Spatial),
            cum_width: f.cumulative(Axis::Width),
            cum_bottleneck: f.cumulative(Axis::Bottleneck),
            cum_depth: f.cumulative(Axis::Depth),
            resolution_override: f.resolution_override,
        }
    }

    fn factors(&self) -> ExpansionFactors {
        let cum = [
            self.cum_fast,
            self.cum_temporal,
            self.cum_spatial,
            self.cum_width,
            self.cum_bottleneck,
            self.cum_depth,
        ];
        ExpansionFactors {
            gamma_tau: self.gamma_tau,
            gamma_t: self.gamma_t,
            gamma_s: self.gamma_s,
            gamma_w: self.gamma_w,
            gamma_b: self.gamma_b,
            gamma_d: self.gamma_d,
            cumulative: Axis::ALL.into_iter().zip(cum).collect(),
            resolution_override: self.resolution_override,
        }
    }
}

/// One plot-ready point of the complexity/score trade-off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub axis: String,
    /// `start`, `chosen` or `candidate`.
    pub kind: String,
    pub knob: f64,
    pub flops: u64,
    pub params: u64,
    pub score: Option<f64>,
}

/// The start, every chosen step and every evaluated candidate (the chosen
/// one included) of each step.
pub fn curve_points(t: &Trajectory) -> Vec<CurvePoint> {
    let point = |step, axis: &str, kind: &str, knob, flops, params, score| CurvePoint {
        step,
        axis: axis.to_string(),
        kind: kind.to_string(),
        knob,
        flops,
        params,
        score,
    };
    let mut pts = vec![point(0, "start", "start", 1.0, t.start_cost, t.start_params, t.start_score)];
    for s in &t.steps {
        pts.push(point(s.index, s.axis.name(), "chosen", s.knob, s.cost_flops, s.params, Some(s.score)));
        for (a, c) in &s.candidates {
            pts.push(point(s.index, a.name(), "candidate", c.knob, c.cost, c.params, Some(c.score)));
        }
    }
    pts
}

pub fn write_curve_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
