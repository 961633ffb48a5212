use super::ops::{
    add_assign, affine_norm, conv3d, global_avg_pool, linear, squeeze_excite, Activation, ConvParams,
};
use super::tensor::Tensor5;
use super::weights::WeightBundle;
use crate::arch::{validate, ArchSpec, BlockRef};
use crate::cost::ShapeTrace;
use crate::error::{Error, Result};

const POINTWISE: ConvParams = ConvParams { stride: [1, 1, 1], padding: [0, 0, 0], groups: 1 };

fn conv_norm(x: &Tensor5, w: &WeightBundle, conv: &str, norm: &str, p: &ConvParams) -> Result<Tensor5> {
    let mut y = conv3d(x, w.conv(conv)?, p)?;
    affine_norm(&mut y, w.norm(norm)?)?;
    Ok(y)
}

/// One bottleneck block; weights are looked up under `block.id`.
pub fn block_forward(block: &BlockRef, input: &Tensor5, w: &WeightBundle) -> Result<Tensor5> {
    let b = &block.spec;
    if input.channels() != b.in_width {
        return Err(Error::ShapeMismatch(format!(
            "{} expects {} channels, got {}",
            block.id,
            b.in_width,
            input.channels()
        )));
    }
    let id = |s: &str| format!("{}.{s}", block.id);
    let act = if b.swish { Activation::Swish } else { Activation::Relu };
    let stride = [1, b.spatial_stride, b.spatial_stride];

    let mut y = conv_norm(input, w, &id("conv_a"), &id("norm_a"), &POINTWISE)?;
    act.apply(y.as_mut_slice());
    let groups = if b.channelwise { b.bottleneck_width } else { 1 };
    let mut y = conv_norm(&y, w, &id("conv_b"), &id("norm_b"), &ConvParams::same([3, 3, 3], groups).with_stride(stride))?;
    if b.has_se {
        squeeze_excite(&mut y, w.linear(&id("se.reduce"))?, w.linear(&id("se.expand"))?)?;
    }
    act.apply(y.as_mut_slice());
    let mut y = conv_norm(&y, w, &id("conv_c"), &id("norm_c"), &POINTWISE)?;

    if b.has_projection_shortcut {
        let s = conv_norm(input, w, &id("shortcut"), &id("shortcut_norm"), &POINTWISE.with_stride(stride))?;
        add_assign(&mut y, &s)?;
    } else {
        add_assign(&mut y, input)?;
    }
    Activation::Relu.apply(y.as_mut_slice());
    Ok(y)
}

fn check_clip(spec: &ArchSpec, clip: &Tensor5) -> Result<()> {
    let violations = validate(spec);
    if !violations.is_empty() {
        return Err(Error::InvalidSpec(violations));
    }
    let [_, c, t, h, wd] = clip.dims();
    let g = &spec.input;
    if (c, t, h, wd) != (3, g.frames, g.resolution, g.resolution) {
        return Err(Error::ShapeMismatch(format!(
            "clip is {c}x{t}x{h}x{wd}, spec expects 3x{}x{}x{}",
            g.frames, g.resolution, g.resolution
        )));
    }
    Ok(())
}

fn record(trace: &mut Option<&mut ShapeTrace>, id: &str, x: &Tensor5) {
    if let Some(tr) = trace.as_deref_mut() {
        let [_, c, t, h, w] = x.dims();
        tr.push(id, t, h, w, c);
    }
}

/// Stem, all blocks and conv5, returning the activation before pooling.
fn trunk(spec: &ArchSpec, w: &WeightBundle, clip: &Tensor5, mut trace: Option<&mut ShapeTrace>) -> Result<Tensor5> {
    check_clip(spec, clip)?;
    record(&mut trace, "data", clip);

    let spatial = ConvParams { stride: [1, 2, 2], padding: [0, 1, 1], groups: 1 };
    let x = conv3d(clip, w.conv("conv1.spatial")?, &spatial)?;
    let temporal = ConvParams::same([3, 1, 1], spec.conv1.width);
    let mut x = conv_norm(&x, w, "conv1.temporal", "conv1.norm", &temporal)?;
    Activation::Relu.apply(x.as_mut_slice());
    record(&mut trace, "conv1", &x);

    for block in spec.blocks() {
        x = block_forward(&block, &x, w)?;
        record(&mut trace, &block.id, &x);
    }

    let mut x = conv_norm(&x, w, "head.conv5", "head.conv5_norm", &POINTWISE)?;
    Activation::Relu.apply(x.as_mut_slice());
    record(&mut trace, "conv5", &x);
    Ok(x)
}

/// Classifier head applied to pooled features.
pub fn head(w: &WeightBundle, features: &[Vec<f32>]) -> Result<Vec<Vec<f32>>> {
    let mut h = linear(features, w.linear("head.fc1")?)?;
    h.iter_mut().for_each(|r| Activation::Relu.apply(r));
    linear(&h, w.linear("head.fc2")?)
}

/// Globally pooled post-conv5 activations, one row per sample.
pub fn features(spec: &ArchSpec, w: &WeightBundle, clip: &Tensor5) -> Result<Vec<Vec<f32>>> {
    Ok(global_avg_pool(&trunk(spec, w, clip, None)?))
}

/// Logits, one row of `classes` values per sample.
pub fn forward(spec: &ArchSpec, w: &WeightBundle, clip: &Tensor5) -> Result<Vec<Vec<f32>>> {
    head(w, &features(spec, w, clip)?)
}

/// Logits plus the activation shape after every stage-level layer, with the
/// same ids as `propagate_shapes`.
pub fn forward_traced(spec: &ArchSpec, w: &WeightBundle, clip: &Tensor5) -> Result<(Vec<Vec<f32>>, ShapeTrace)> {
    let mut trace = ShapeTrace::default();
    let x = trunk(spec, w, clip, Some(&mut trace))?;
    Ok((head(w, &global_avg_pool(&x))?, trace))
}

/// Runs engine calls on a dedicated pool with a fixed number of workers.
pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    pub fn new(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    pub fn forward(&self, spec: &ArchSpec, w: &WeightBundle, clip: &Tensor5) -> Result<Vec<Vec<f32>>> {
        self.install(|| forward(spec, w, clip))
    }

    pub fn features(&self, spec: &ArchSpec, w: &WeightBundle, clip: &Tensor5) -> Result<Vec<Vec<f32>>> {
        self.install(|| features(spec, w, clip))
    }
}
