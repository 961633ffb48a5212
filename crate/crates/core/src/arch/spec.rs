use serde::{Deserialize, Serialize};

use super::config::CountConvention;
use crate::error::{Error, Result};

/// Clip geometry `frames x resolution^2`, sampled every `stride` source frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputGeometry {
    pub frames: usize,
    pub stride: usize,
    pub resolution: usize,
    /// Spatial multiplier the resolution was derived from; test-time crops
    /// scale with it.
    pub spatial_scale: f64,
}

/// Stem: a `1x3^2` spatial conv (spatial stride 2) followed by a `3x1x1`
/// channel-wise temporal conv.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conv1Spec {
    pub width: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSpec {
    pub name: String,
    pub blocks: usize,
    pub out_width: usize,
    pub bottleneck_width: usize,
    /// Spatial stride of the center filter of the first block.
    pub spatial_stride: usize,
    pub temporal_stride: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub conv5_width: usize,
    pub fc1_width: usize,
    pub classes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchFlags {
    pub channelwise: bool,
    pub se: bool,
    pub se_every: usize,
    pub se_ratio: f64,
    pub swish: bool,
}

/// A fully resolved network description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub input: InputGeometry,
    pub conv1: Conv1Spec,
    pub stages: Vec<StageSpec>,
    pub head: HeadSpec,
    pub flags: ArchFlags,
    #[serde(default)]
    pub count_convention: CountConvention,
}

/// One residual block, resolved against its position in the network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSpec {
    pub in_width: usize,
    pub bottleneck_width: usize,
    pub out_width: usize,
    pub spatial_stride: usize,
    pub has_se: bool,
    pub has_projection_shortcut: bool,
    /// Hidden width of the squeeze-excitation MLP (0 when `has_se` is false).
    pub se_width: usize,
    pub channelwise: bool,
    pub swish: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockRef {
    pub stage: usize,
    pub index: usize,
    pub id: String,
    pub spec: BlockSpec,
}

pub fn block_id(stage: &str, index: usize) -> String {
    format!("{stage}.{index}")
}

impl ArchSpec {
    /// Every residual block in execution order.
    pub fn blocks(&self) -> Vec<BlockRef> {
        let mut out = Vec::new();
        let mut in_width = self.conv1.width;
        for (si, stage) in self.stages.iter().enumerate() {
            for bi in 0..stage.blocks {
                let stride = if bi == 0 { stage.spatial_stride } else { 1 };
                let has_se = self.flags.se && bi % self.flags.se_every.max(1) == 0;
                let se_width = if has_se {
                    ((stage.bottleneck_width as f64 * self.flags.se_ratio).floor() as usize).max(1)
                } else {
                    0
                };
                let spec = BlockSpec {
                    in_width,
                    bottleneck_width: stage.bottleneck_width,
                    out_width: stage.out_width,
                    spatial_stride: stride,
                    has_se,
                    has_projection_shortcut: in_width != stage.out_width || stride != 1,
                    se_width,
                    channelwise: self.flags.channelwise,
                    swish: self.flags.swish,
                };
                out.push(BlockRef {
                    stage: si,
                    index: bi,
                    id: block_id(&stage.name, bi),
                    spec,
                });
                in_width = stage.out_width;
            }
        }
        out
    }

    pub fn last_stage_width(&self) -> usize {
        self.stages.last().map_or(self.conv1.width, |s| s.out_width)
    }

    pub fn stage_widths(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.out_width).collect()
    }

    pub fn bottleneck_widths(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.bottleneck_width).collect()
    }

    pub fn depths(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.blocks).collect()
    }

    /// Same spec with a different square input resolution (for test crops).
    pub fn with_resolution(&self, resolution: usize) -> ArchSpec {
        let mut s = self.clone();
        s.input.resolution = resolution;
        s
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ArchSpec = toml::from_str(text)?;
        let violations = validate(&spec);
        if violations.is_empty() {
            Ok(spec)
        } else {
            Err(Error::InvalidSpec(violations))
        }
    }
}

/// Human-readable violations of the structural invariants; empty when the
/// spec is well formed.
pub fn validate(spec: &ArchSpec) -> Vec<String> {
    let mut v = Vec::new();
    let i = &spec.input;
    if i.frames == 0 {
        v.push("input.frames must be >= 1".to_string());
    }
    if i.stride == 0 {
        v.push("input.stride must be >= 1".to_string());
    }
    if i.resolution == 0 {
        v.push("input.resolution must be >= 1".to_string());
    }
    if !(i.spatial_scale.is_finite() && i.spatial_scale > 0.0) {
        v.push(format!("input.spatial_scale must be positive, got {}", i.spatial_scale));
    }
    if spec.conv1.width == 0 {
        v.push("conv1.width must be >= 1".to_string());
    }
    if spec.stages.is_empty() {
        v.push("at least one stage is required".to_string());
    }
    let mut prev_width: Option<usize> = None;
    for (k, s) in spec.stages.iter().enumerate() {
        let at = format!("stages[{k}] ({})", s.name);
        if s.blocks == 0 {
            v.push(format!("{at}: blocks must be >= 1"));
        }
        if s.out_width == 0 {
            v.push(format!("{at}: out_width must be >= 1"));
        }
        if s.bottleneck_width == 0 {
            v.push(format!("{at}: bottleneck_width must be >= 1"));
        }
        if s.temporal_stride != 1 {
            v.push(format!(
                "{at}: temporal stride {} (no temporal downsampling is allowed)",
                s.temporal_stride
            ));
        }
        if s.spatial_stride != 2 {
            v.push(format!(
                "{at}: first-block spatial stride must be 2, got {}",
                s.spatial_stride
            ));
        }
        if let Some(p) = prev_width {
            if s.out_width <= p {
                v.push(format!("{at}: out_width {} does not grow over previous stage ({p})", s.out_width));
            }
        }
        prev_width = Some(s.out_width);
    }
    let h = &spec.head;
    if h.conv5_width == 0 || h.fc1_width == 0 || h.classes == 0 {
        v.push("head widths and class count must be >= 1".to_string());
    }
    let f = &spec.flags;
    if !(f.se_ratio > 0.0 && f.se_ratio <= 1.0) {
        v.push(format!("flags.se_ratio must lie in (0, 1], got {}", f.se_ratio));
    }
    if f.se_every == 0 {
        v.push("flags.se_every must be >= 1".to_string());
    }
    v
}
