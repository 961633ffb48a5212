use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ops::{ConvKernel, LinearParams, NormParams};
use crate::arch::{validate, ArchSpec};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LayerWeights {
    Conv(ConvKernel),
    Norm(NormParams),
    Linear(LinearParams),
}

impl LayerWeights {
    pub fn element_count(&self) -> usize {
        match self {
            LayerWeights::Conv(k) => k.data.len(),
            LayerWeights::Norm(n) => n.scale.len() + n.shift.len(),
            LayerWeights::Linear(l) => l.weight.len() + l.bias.len(),
        }
    }
}

/// All weights of one instantiated spec, keyed by layer id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightBundle {
    pub seed: u64,
    pub layers: BTreeMap<String, LayerWeights>,
}

impl WeightBundle {
    pub fn element_count(&self) -> usize {
        self.layers.values().map(LayerWeights::element_count).sum()
    }

    fn get(&self, id: &str) -> Result<&LayerWeights> {
        self.layers
            .get(id)
            .ok_or_else(|| Error::ShapeMismatch(format!("weight bundle has no layer `{id}`")))
    }

    pub fn conv(&self, id: &str) -> Result<&ConvKernel> {
        match self.get(id)? {
            LayerWeights::Conv(k) => Ok(k),
            _ => Err(Error::ShapeMismatch(format!("layer `{id}` is not a convolution"))),
        }
    }

    pub fn norm(&self, id: &str) -> Result<&NormParams> {
        match self.get(id)? {
            LayerWeights::Norm(n) => Ok(n),
            _ => Err(Error::ShapeMismatch(format!("layer `{id}` is not a normalization"))),
        }
    }

    pub fn linear(&self, id: &str) -> Result<&LinearParams> {
        match self.get(id)? {
            LayerWeights::Linear(l) => Ok(l),
            _ => Err(Error::ShapeMismatch(format!("layer `{id}` is not fully connected"))),
        }
    }

    pub fn norm_mut(&mut self, id: &str) -> Option<&mut NormParams> {
        match self.layers.get_mut(id) {
            Some(LayerWeights::Norm(n)) => Some(n),
            _ => None,
        }
    }

    pub fn linear_mut(&mut self, id: &str) -> Option<&mut LinearParams> {
        match self.layers.get_mut(id) {
            Some(LayerWeights::Linear(l)) => Some(l),
            _ => None,
        }
    }

    pub fn conv_mut(&mut self, id: &str) -> Option<&mut ConvKernel> {
        match self.layers.get_mut(id) {
            Some(LayerWeights::Conv(k)) => Some(k),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerShape {
    Conv { out: usize, in_per_group: usize, size: [usize; 3] },
    Norm { channels: usize },
    Linear { inputs: usize, outputs: usize },
}

/// Every weight layer of `spec` in network order.
pub fn layer_plan(spec: &ArchSpec) -> Vec<(String, LayerShape)> {
    fn conv(plan: &mut Vec<(String, LayerShape)>, id: String, out: usize, in_per_group: usize, size: [usize; 3]) {
        plan.push((id, LayerShape::Conv { out, in_per_group, size }));
    }
    let mut plan = Vec::new();
    let c1 = spec.conv1.width;
    conv(&mut plan, "conv1.spatial".into(), c1, 3, [1, 3, 3]);
    conv(&mut plan, "conv1.temporal".into(), c1, 1, [3, 1, 1]);
    plan.push(("conv1.norm".into(), LayerShape::Norm { channels: c1 }));

    for block in spec.blocks() {
        let b = &block.spec;
        let id = |s: &str| format!("{}.{s}", block.id);
        let bw = b.bottleneck_width;
        conv(&mut plan, id("conv_a"), bw, b.in_width, [1, 1, 1]);
        plan.push((id("norm_a"), LayerShape::Norm { channels: bw }));
        let in_per_group = if b.channelwise { 1 } else { bw };
        conv(&mut plan, id("conv_b"), bw, in_per_group, [3, 3, 3]);
        plan.push((id("norm_b"), LayerShape::Norm { channels: bw }));
        if b.has_se {
            plan.push((id("se.reduce"), LayerShape::Linear { inputs: bw, outputs: b.se_width }));
            plan.push((id("se.expand"), LayerShape::Linear { inputs: b.se_width, outputs: bw }));
        }
        conv(&mut plan, id("conv_c"), b.out_width, bw, [1, 1, 1]);
        plan.push((id("norm_c"), LayerShape::Norm { channels: b.out_width }));
        if b.has_projection_shortcut {
            conv(&mut plan, id("shortcut"), b.out_width, b.in_width, [1, 1, 1]);
            plan.push((id("shortcut_norm"), LayerShape::Norm { channels: b.out_width }));
        }
    }

    let h = &spec.head;
    conv(&mut plan, "head.conv5".into(), h.conv5_width, spec.last_stage_width(), [1, 1, 1]);
    plan.push(("head.conv5_norm".into(), LayerShape::Norm { channels: h.conv5_width }));
    plan.push(("head.fc1".into(), LayerShape::Linear { inputs: h.conv5_width, outputs: h.fc1_width }));
    plan.push(("head.fc2".into(), LayerShape::Linear { inputs: h.fc1_width, outputs: h.classes }));
    plan
}

/// Zero-mean uniform weights scaled by `1/sqrt(fan_in)`; normalization
/// layers start at scale 1, shift 0. Layers are drawn in network order from
/// a single seeded stream.
pub fn init_weights(spec: &ArchSpec, seed: u64) -> Result<WeightBundle> {
    let violations = validate(spec);
    if !violations.is_empty() {
        return Err(Error::InvalidSpec(violations));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |len: usize, fan_in: usize| -> Vec<f32> {
        let bound = 1.0 / (fan_in as f32).sqrt();
        (0..len).map(|_| rng.gen_range(-1.0f32..1.0) * bound).collect()
    };
    let mut layers = BTreeMap::new();
    for (id, shape) in layer_plan(spec) {
        let w = match shape {
            LayerShape::Conv { out, in_per_group, size } => {
                let fan_in = in_per_group * size.iter().product::<usize>();
                LayerWeights::Conv(ConvKernel {
                    out_channels: out,
                    in_per_group,
                    size,
                    data: uniform(out * fan_in, fan_in),
                })
            }
            LayerShape::Norm { channels } => LayerWeights::Norm(NormParams::identity(channels)),
            LayerShape::Linear { inputs, outputs } => LayerWeights::Linear(LinearParams {
                in_features: inputs,
                out_features: outputs,
                weight: uniform(inputs * outputs, inputs),
                bias: uniform(outputs, inputs),
            }),
        };
        layers.insert(id, w);
    }
    Ok(WeightBundle { seed, layers })
}
