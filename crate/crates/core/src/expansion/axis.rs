use crate::arch::{Axis, ExpansionFactors};
use crate::error::{Error, Result};

/// Frame-stride multiplier of a nominal (knob 2) temporal step.
pub const TEMPORAL_STRIDE_STEP: f64 = 0.75;

/// Largest knob that keeps `axis` feasible from `f`, if bounded.
pub fn knob_limit(f: &ExpansionFactors, axis: Axis) -> Option<f64> {
    match axis {
        // the rounded frame stride must stay at least one
        Axis::Fast => Some(2.0 * f.gamma_tau),
        _ => None,
    }
}

/// Expand `f` along a single axis by a continuous knob; knob 2 is the
/// nominal step of each operator.
pub fn apply_axis(f: &ExpansionFactors, axis: Axis, knob: f64) -> Result<ExpansionFactors> {
    if !(knob.is_finite() && knob >= 1.0) {
        return Err(Error::InvalidFactors(format!("knob must be at least 1, got {knob}")));
    }
    let mut g = f.clone();
    if knob == 1.0 {
        return Ok(g);
    }
    match axis {
        Axis::Fast => {
            let tau = f.gamma_tau / knob;
            if tau < 0.5 {
                return Err(Error::InfeasibleAxis {
                    axis,
                    reason: format!("frame stride {tau:.3} would round below 1"),
                });
            }
            g.gamma_tau = tau;
            g.gamma_t *= knob;
        }
        Axis::Temporal => {
            g.gamma_t *= knob;
            g.gamma_tau *= TEMPORAL_STRIDE_STEP.powf(knob.log2());
        }
        Axis::Spatial => {
            g.gamma_s *= knob.sqrt();
            g.resolution_override = None;
        }
        Axis::Width => g.gamma_w *= knob,
        Axis::Bottleneck => g.gamma_b *= knob,
        Axis::Depth => g.gamma_d *= knob,
    }
    *g.cumulative.entry(axis).or_insert(1.0) *= knob;
    Ok(g)
}
