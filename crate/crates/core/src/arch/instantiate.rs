use super::config::ArchConfig;
use super::factors::ExpansionFactors;
use super::rounding::{nearest_int, nearest_multiple, round_depth, round_width};
use super::spec::{ArchFlags, ArchSpec, Conv1Spec, HeadSpec, InputGeometry, StageSpec};
use crate::error::{Error, Result};

/// Spatial size of the single-frame base input.
pub const BASE_RESOLUTION: usize = 112;
/// Stage widths before the global width multiplier (`2 * gamma_w`).
pub const BASE_STAGE_WIDTHS: [usize; 4] = [12, 24, 48, 96];
pub const BASE_STAGE_DEPTHS: [usize; 4] = [1, 2, 5, 3];
pub const STAGE_NAMES: [&str; 4] = ["res2", "res3", "res4", "res5"];
pub const WIDTH_DIVISOR: usize = 8;
pub const RESOLUTION_MULTIPLE: usize = 8;
/// Smallest admissible spatial size of the last stage.
pub const MIN_RES5_SIZE: usize = 4;

/// Integer clip geometry for a set of factors.
pub fn resolve_input_geometry(factors: &ExpansionFactors) -> InputGeometry {
    let frames = nearest_int(factors.gamma_t).max(1) as usize;
    let stride = nearest_int(factors.gamma_tau).max(1) as usize;
    let resolution = factors.resolution_override.unwrap_or_else(|| {
        nearest_multiple(BASE_RESOLUTION as f64 * factors.gamma_s, RESOLUTION_MULTIPLE)
    });
    InputGeometry {
        frames,
        stride,
        resolution,
        spatial_scale: factors.gamma_s,
    }
}

/// Output size of a `k`-tap filter with "same" padding `(k - 1) / 2`.
pub fn conv_out_size(input: usize, kernel: usize, stride: usize) -> usize {
    let pad = (kernel - 1) / 2;
    (input + 2 * pad).saturating_sub(kernel) / stride + 1
}

/// Build the layer-by-layer description for `factors`.
pub fn instantiate(factors: &ExpansionFactors, config: &ArchConfig) -> Result<ArchSpec> {
    factors.validate()?;
    config.validate()?;

    let input = resolve_input_geometry(factors);
    if input.resolution == 0 {
        return Err(Error::DegenerateShape {
            layer: "data".into(),
            detail: format!("gamma_s = {} rounds to a zero-pixel input", factors.gamma_s),
        });
    }
    // stem and every stage halve the spatial size
    let mut size = conv_out_size(input.resolution, 3, 2);
    for _ in STAGE_NAMES {
        size = conv_out_size(size, 3, 2);
    }
    if size < MIN_RES5_SIZE {
        return Err(Error::DegenerateShape {
            layer: "res5".into(),
            detail: format!(
                "input {}px leaves {size}px at res5 (minimum {MIN_RES5_SIZE})",
                input.resolution
            ),
        });
    }

    let width_multiplier = 2.0 * factors.gamma_w;
    let stages: Vec<StageSpec> = STAGE_NAMES
        .iter()
        .zip(BASE_STAGE_WIDTHS)
        .zip(BASE_STAGE_DEPTHS)
        .map(|((name, base_w), base_d)| {
            let out_width = round_width(base_w, width_multiplier, WIDTH_DIVISOR);
            StageSpec {
                name: (*name).to_string(),
                blocks: round_depth(base_d, factors.gamma_d),
                out_width,
                bottleneck_width: bottleneck(out_width, factors.gamma_b),
                spatial_stride: 2,
                temporal_stride: 1,
            }
        })
        .collect();

    let res5 = stages.last().map(|s| s.out_width).unwrap_or(1);
    Ok(ArchSpec {
        input,
        conv1: Conv1Spec { width: stages[0].out_width },
        head: HeadSpec {
            conv5_width: bottleneck(res5, factors.gamma_b),
            fc1_width: config.head_width,
            classes: config.num_classes,
        },
        stages,
        flags: ArchFlags {
            channelwise: config.use_channelwise,
            se: config.use_se,
            se_every: config.se_every,
            se_ratio: config.se_ratio,
            swish: config.use_swish,
        },
        count_convention: config.count_convention.clone(),
    })
}

fn bottleneck(width: usize, gamma_b: f64) -> usize {
    nearest_int(width as f64 * gamma_b).max(1) as usize
}
