use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor5;
use crate::error::{Error, Result};

pub const NORM_EPS: f32 = 1e-5;

/// Output rows per parallel GEMM task. Fixed so that the work split, and
/// hence every summation order, is independent of the thread count.
const GEMM_ROW_CHUNK: usize = 16;

/// Kernel laid out as `[out][in / groups][kt][kh][kw]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvKernel {
    pub out_channels: usize,
    pub in_per_group: usize,
    pub size: [usize; 3],
    pub data: Vec<f32>,
}

impl ConvKernel {
    pub fn zeros(out_channels: usize, in_per_group: usize, size: [usize; 3]) -> Self {
        let len = out_channels * in_per_group * size.iter().product::<usize>();
        Self { out_channels, in_per_group, size, data: vec![0.0; len] }
    }

    pub fn taps(&self) -> usize {
        self.size.iter().product()
    }

    pub fn at(&self, o: usize, i: usize, t: usize, h: usize, w: usize) -> f32 {
        let [kt, kh, kw] = self.size;
        self.data[(((o * self.in_per_group + i) * kt + t) * kh + h) * kw + w]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvParams {
    pub stride: [usize; 3],
    pub padding: [usize; 3],
    pub groups: usize,
}

impl ConvParams {
    /// Stride 1 and "same" padding for an odd kernel.
    pub fn same(kernel: [usize; 3], groups: usize) -> Self {
        Self {
            stride: [1, 1, 1],
            padding: kernel.map(|k| k / 2),
            groups,
        }
    }

    pub fn with_stride(mut self, stride: [usize; 3]) -> Self {
        self.stride = stride;
        self
    }
}

/// Per-channel inference-mode normalization with identity statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub scale: Vec<f32>,
    pub shift: Vec<f32>,
}

impl NormParams {
    pub fn identity(channels: usize) -> Self {
        Self { scale: vec![1.0; channels], shift: vec![0.0; channels] }
    }
}

/// Fully connected layer, `weight` laid out as `[out][in]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub in_features: usize,
    pub out_features: usize,
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Swish,
}

impl Activation {
    pub fn apply(self, x: &mut [f32]) {
        match self {
            Activation::Relu => x.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Swish => x.iter_mut().for_each(|v| *v *= sigmoid(*v)),
        }
    }
}

pub fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

pub fn conv_output_len(input: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    (input + 2 * padding).checked_sub(kernel).map(|v| v / stride + 1)
}

/// Cross-correlation with zero padding.
pub fn conv3d(input: &Tensor5, kernel: &ConvKernel, p: &ConvParams) -> Result<Tensor5> {
    let [n, c, t, h, w] = input.dims();
    let g = p.groups;
    let mismatch = |m: String| Err(Error::ShapeMismatch(m));
    if g == 0 || c % g != 0 || kernel.out_channels % g != 0 {
        return mismatch(format!(
            "{c} input / {} output channels not divisible by {g} groups",
            kernel.out_channels
        ));
    }
    if c / g != kernel.in_per_group {
        return mismatch(format!("kernel expects {} channels per group, input has {}", kernel.in_per_group, c / g));
    }
    if kernel.data.len() != kernel.out_channels * kernel.in_per_group * kernel.taps() {
        return mismatch("kernel data length does not match its shape".into());
    }
    if p.stride.contains(&0) {
        return mismatch("zero stride".into());
    }
    let mut out_dims = [n, kernel.out_channels, 0, 0, 0];
    for (i, &len) in [t, h, w].iter().enumerate() {
        out_dims[2 + i] = match conv_output_len(len, kernel.size[i], p.stride[i], p.padding[i]) {
            Some(o) if o > 0 => o,
            _ => return mismatch(format!("kernel {:?} does not fit input {:?}", kernel.size, [t, h, w])),
        };
    }
    let mut out = Tensor5::zeros(out_dims);

    if g == c && kernel.in_per_group == 1 && kernel.out_channels == c {
        for s in 0..n {
            depthwise(input, s, kernel, p, &mut out);
        }
    } else if kernel.size == [1, 1, 1] && p.padding == [0, 0, 0] {
        for s in 0..n {
            let cols = if p.stride == [1, 1, 1] {
                std::borrow::Cow::Borrowed(input.sample(s))
            } else {
                std::borrow::Cow::Owned(subsample(input, s, p.stride, out_dims))
            };
            grouped_gemm(kernel, g, &cols, &mut out, s);
        }
    } else {
        for s in 0..n {
            let cols = im2col(input, s, kernel, p, out_dims);
            grouped_gemm(kernel, g, &cols, &mut out, s);
        }
    }
    Ok(out)
}

/// `cols` holds `groups` stacked `[in_per_group·taps][positions]` matrices.
fn grouped_gemm(kernel: &ConvKernel, groups: usize, cols: &[f32], out: &mut Tensor5, sample: usize) {
    let positions = out.volume();
    let og = kernel.out_channels / groups;
    let k = kernel.in_per_group * kernel.taps();
    let dst = out.sample_mut(sample);
    for gi in 0..groups {
        let a = &kernel.data[gi * og * k..(gi + 1) * og * k];
        let b = &cols[gi * k * positions..(gi + 1) * k * positions];
        let c = &mut dst[gi * og * positions..(gi + 1) * og * positions];
        gemm(og, k, positions, a, b, c);
    }
}

fn subsample(input: &Tensor5, s: usize, stride: [usize; 3], out_dims: [usize; 5]) -> Vec<f32> {
    let [_, c, t, h, w] = input.dims();
    let [_, _, to, ho, wo] = out_dims;
    let src = input.sample(s);
    let mut cols = Vec::with_capacity(c * to * ho * wo);
    for ci in 0..c {
        for z in 0..to {
            for y in 0..ho {
                let row = ((ci * t + z * stride[0]) * h + y * stride[1]) * w;
                cols.extend((0..wo).map(|x| src[row + x * stride[2]]));
            }
        }
    }
    cols
}

fn im2col(input: &Tensor5, s: usize, kernel: &ConvKernel, p: &ConvParams, out_dims: [usize; 5]) -> Vec<f32> {
    let [_, c, t, h, w] = input.dims();
    let [_, _, to, ho, wo] = out_dims;
    let [kt, kh, kw] = kernel.size;
    let positions = to * ho * wo;
    let src = input.sample(s);
    let mut cols = vec![0.0f32; c * kernel.taps() * positions];
    let mut r = 0;
    for ci in 0..c {
        for dz in 0..kt {
            for dy in 0..kh {
                for dx in 0..kw {
                    let row = &mut cols[r * positions..(r + 1) * positions];
                    r += 1;
                    for z in 0..to {
                        let Some(zi) = (z * p.stride[0] + dz).checked_sub(p.padding[0]).filter(|&v| v < t) else {
                            continue;
                        };
                        for y in 0..ho {
                            let Some(yi) = (y * p.stride[1] + dy).checked_sub(p.padding[1]).filter(|&v| v < h) else {
                                continue;
                            };
                            let base = ((ci * t + zi) * h + yi) * w;
                            let dst = &mut row[(z * ho + y) * wo..(z * ho + y + 1) * wo];
                            for (x, d) in dst.iter_mut().enumerate() {
                                if let Some(xi) = (x * p.stride[2] + dx).checked_sub(p.padding[2]).filter(|&v| v < w) {
                                    *d = src[base + xi];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    cols
}

fn depthwise(input: &Tensor5, s: usize, kernel: &ConvKernel, p: &ConvParams, out: &mut Tensor5) {
    let [_, _, t, h, w] = input.dims();
    let [_, _, to, ho, wo] = out.dims();
    let [kt, kh, kw] = kernel.size;
    let [pt, ph, pw] = p.padding;
    let [st, sh, sw] = p.stride;
    let (tp, hp, wp) = (t + 2 * pt, h + 2 * ph, w + 2 * pw);
    let src = input.sample(s);
    let plane_in = t * h * w;
    let plane_out = to * ho * wo;
    let taps = kernel.taps();

    out.sample_mut(s)
        .par_chunks_mut(plane_out)
        .enumerate()
        .for_each_init(Vec::new, |pad: &mut Vec<f32>, (ci, dst)| {
            pad.clear();
            pad.resize(tp * hp * wp, 0.0);
            let plane = &src[ci * plane_in..(ci + 1) * plane_in];
            for z in 0..t {
                for y in 0..h {
                    let at = ((z + pt) * hp + y + ph) * wp + pw;
                    pad[at..at + w].copy_from_slice(&plane[(z * h + y) * w..(z * h + y + 1) * w]);
                }
            }
            let k = &kernel.data[ci * taps..(ci + 1) * taps];
            for z in 0..to {
                for dz in 0..kt {
                    let zi = z * st + dz;
                    for y in 0..ho {
                        let out_row = &mut dst[(z * ho + y) * wo..(z * ho + y + 1) * wo];
                        for dy in 0..kh {
                            let yi = y * sh + dy;
                            let row = &pad[(zi * hp + yi) * wp..(zi * hp + yi + 1) * wp];
                            for dx in 0..kw {
                                let wt = k[(dz * kh + dy) * kw + dx];
                                if sw == 1 {
                                    for (o, &v) in out_row.iter_mut().zip(&row[dx..dx + wo]) {
                                        *o += wt * v;
                                    }
                                } else {
                                    for (x, o) in out_row.iter_mut().enumerate() {
                                        *o += wt * row[x * sw + dx];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
}

/// `c = a · b` for row-major `a: m×k`, `b: k×n`, `c: m×n`.
pub fn gemm(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    gemm_strided(m, k, n, a, (k as isize, 1), b, (n as isize, 1), c);
}

#[allow(clippy::too_many_arguments)]
fn gemm_strided(m: usize, k: usize, n: usize, a: &[f32], sa: (isize, isize), b: &[f32], sb: (isize, isize), c: &mut [f32]) {
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.fill(0.0);
        return;
    }
    c.par_chunks_mut(GEMM_ROW_CHUNK * n).enumerate().for_each(|(i, chunk)| {
        let rows = chunk.len() / n;
        let a_off = i * GEMM_ROW_CHUNK * sa.0 as usize;
        // SAFETY: the row block starts inside `a`, every index it touches is
        // bounded by `rows`, `k` and the strides, and `chunk` is exactly
        // `rows × n` contiguous floats.
        unsafe {
            matrixmultiply::sgemm(
                rows,
                k,
                n,
                1.0,
                a.as_ptr().add(a_off),
                sa.0,
                sa.1,
                b.as_ptr(),
                sb.0,
                sb.1,
                0.0,
                chunk.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    });
}

pub fn affine_norm(x: &mut Tensor5, norm: &NormParams) -> Result<()> {
    let c = x.channels();
    if norm.scale.len() != c || norm.shift.len() != c {
        return Err(Error::ShapeMismatch(format!("norm has {} channels, input {c}", norm.scale.len())));
    }
    let inv = 1.0 / (1.0 + NORM_EPS).sqrt();
    let vol = x.volume();
    for (i, plane) in x.as_mut_slice().chunks_mut(vol).enumerate() {
        let a = norm.scale[i % c] * inv;
        let b = norm.shift[i % c];
        plane.iter_mut().for_each(|v| *v = *v * a + b);
    }
    Ok(())
}

/// Mean over `T, H, W`; one row of `C` values per sample.
pub fn global_avg_pool(x: &Tensor5) -> Vec<Vec<f32>> {
    let c = x.channels();
    let vol = x.volume();
    (0..x.batch())
        .map(|s| {
            x.sample(s)
                .chunks(vol)
                .take(c)
                .map(|plane| plane.iter().sum::<f32>() / vol as f32)
                .collect()
        })
        .collect()
}

pub fn linear(rows: &[Vec<f32>], layer: &LinearParams) -> Result<Vec<Vec<f32>>> {
    let (fi, fo) = (layer.in_features, layer.out_features);
    if layer.weight.len() != fi * fo || layer.bias.len() != fo {
        return Err(Error::ShapeMismatch("linear weights do not match their shape".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != fi) {
        return Err(Error::ShapeMismatch(format!("linear expects {fi} inputs, got {}", r.len())));
    }
    let x: Vec<f32> = rows.concat();
    let mut y = vec![0.0f32; rows.len() * fo];
    // x · weightᵀ, reading the [out][in] weight with swapped strides
    gemm_strided(rows.len(), fi, fo, &x, (fi as isize, 1), &layer.weight, (1, fi as isize), &mut y);
    Ok(y.chunks(fo.max(1))
        .map(|r| r.iter().zip(&layer.bias).map(|(v, b)| v + b).collect())
        .collect())
}

/// Pool, reduce with ReLU, expand with sigmoid, rescale channels.
pub fn squeeze_excite(x: &mut Tensor5, reduce: &LinearParams, expand: &LinearParams) -> Result<()> {
    let pooled = global_avg_pool(x);
    let mut hidden = linear(&pooled, reduce)?;
    hidden.iter_mut().for_each(|r| Activation::Relu.apply(r));
    let gates = linear(&hidden, expand)?;
    let c = x.channels();
    if expand.out_features != c {
        return Err(Error::ShapeMismatch(format!("excitation has {} outputs for {c} channels", expand.out_features)));
    }
    let vol = x.volume();
    for (s, g) in gates.iter().enumerate() {
        for (plane, &gate) in x.sample_mut(s).chunks_mut(vol).zip(g) {
            let gate = sigmoid(gate);
            plane.iter_mut().for_each(|v| *v *= gate);
        }
    }
    Ok(())
}

pub fn add_assign(x: &mut Tensor5, y: &Tensor5) -> Result<()> {
    if x.dims() != y.dims() {
        return Err(Error::ShapeMismatch(format!("residual add {:?} + {:?}", x.dims(), y.dims())));
    }
    x.as_mut_slice().iter_mut().zip(y.as_slice()).for_each(|(a, b)| *a += b);
    Ok(())
}
