//! Inference-only forward pass over instantiated specs.

mod model;
mod ops;
mod tensor;
mod weights;

pub use model::{block_forward, features, forward, forward_traced, head, Engine};
pub use ops::{
    add_assign, affine_norm, conv3d, conv_output_len, gemm, global_avg_pool, linear, sigmoid, squeeze_excite,
    Activation, ConvKernel, ConvParams, LinearParams, NormParams, NORM_EPS,
};
pub use tensor::Tensor5;
pub use weights::{init_weights, layer_plan, LayerShape, LayerWeights, WeightBundle};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{instantiate, preset, ArchConfig, ArchSpec};
    use crate::cost::{count_params, propagate_shapes};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, dims: [usize; 5]) -> Tensor5 {
        Tensor5::from_fn(dims, |_| rng.gen_range(-1.0..1.0))
    }

    fn random_kernel(rng: &mut ChaCha8Rng, out: usize, in_g: usize, size: [usize; 3]) -> ConvKernel {
        let mut k = ConvKernel::zeros(out, in_g, size);
        k.data.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        k
    }

    /// Seven nested loops over output position and kernel tap, in f64.
    fn naive_conv(x: &Tensor5, k: &ConvKernel, p: &ConvParams) -> Tensor5 {
        let [n, c, t, h, w] = x.dims();
        let [kt, kh, kw] = k.size;
        let out_len = |i: usize, len: usize| (len + 2 * p.padding[i] - k.size[i]) / p.stride[i] + 1;
        let dims = [n, k.out_channels, out_len(0, t), out_len(1, h), out_len(2, w)];
        let og = k.out_channels / p.groups;
        let ig = c / p.groups;
        let fetch = |s: usize, ci: usize, z: isize, y: isize, xx: isize| -> f64 {
            if z < 0 || y < 0 || xx < 0 || z >= t as isize || y >= h as isize || xx >= w as isize {
                0.0
            } else {
                x.get([s, ci, z as usize, y as usize, xx as usize]) as f64
            }
        };
        Tensor5::from_fn(dims, |[s, o, z, y, xx]| {
            let g = o / og;
            let mut acc = 0.0f64;
            for i in 0..ig {
                for a in 0..kt {
                    for b in 0..kh {
                        for d in 0..kw {
                            let zi = (z * p.stride[0] + a) as isize - p.padding[0] as isize;
                            let yi = (y * p.stride[1] + b) as isize - p.padding[1] as isize;
                            let xi = (xx * p.stride[2] + d) as isize - p.padding[2] as isize;
                            acc += k.at(o, i, a, b, d) as f64 * fetch(s, g * ig + i, zi, yi, xi);
                        }
                    }
                }
            }
            acc as f32
        })
    }

    #[test]
    fn delta_kernel_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_tensor(&mut rng, [1, 1, 1, 4, 4]);
        let mut k = ConvKernel::zeros(1, 1, [1, 3, 3]);
        k.data[4] = 1.0;
        let p = ConvParams { stride: [1, 1, 1], padding: [0, 1, 1], groups: 1 };
        assert_eq!(conv3d(&x, &k, &p).unwrap(), x);
    }

    #[test]
    fn channelwise_delta_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_tensor(&mut rng, [2, 5, 3, 6, 6]);
        let mut k = ConvKernel::zeros(5, 1, [3, 3, 3]);
        for c in 0..5 {
            k.data[c * 27 + 13] = 1.0;
        }
        assert_eq!(conv3d(&x, &k, &ConvParams::same([3, 3, 3], 5)).unwrap(), x);
    }

    #[test]
    fn conv_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_tensor(&mut rng, [2, 3, 5, 6, 6]);
        let k = random_kernel(&mut rng, 4, 3, [3, 3, 3]);
        let p = ConvParams::same([3, 3, 3], 1).with_stride([1, 2, 2]);
        let got = conv3d(&x, &k, &p).unwrap();
        let want = naive_conv(&x, &k, &p);
        assert_eq!(got.dims(), [2, 4, 5, 3, 3]);
        assert!(got.max_abs_diff(&want) <= 1e-5, "{}", got.max_abs_diff(&want));
    }

    #[test]
    fn conv_matches_naive_oracle_across_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for case in 0..30 {
            let groups = [1, 1, 2, 3][case % 4];
            let c = groups * rng.gen_range(1..4);
            let depthwise = case % 5 == 0;
            let (groups, out) = if depthwise { (c, c) } else { (groups, groups * rng.gen_range(1..4)) };
            let size = [[1, 1, 1], [3, 3, 3], [1, 3, 3], [3, 1, 1], [2, 3, 1]][rng.gen_range(0..5)];
            let stride = [rng.gen_range(1..3), rng.gen_range(1..3), rng.gen_range(1..3)];
            let padding = if size == [1, 1, 1] && case % 2 == 0 { [0; 3] } else { size.map(|k| k / 2) };
            let dims = [rng.gen_range(1..3), c, rng.gen_range(2..5), 7, rng.gen_range(4..8)];
            let x = random_tensor(&mut rng, dims);
            let k = random_kernel(&mut rng, out, c / groups, size);
            let p = ConvParams { stride, padding, groups };
            let got = conv3d(&x, &k, &p).unwrap();
            let err = got.max_abs_diff(&naive_conv(&x, &k, &p));
            assert!(err <= 1e-5, "case {case}: {err} for {p:?} {size:?}");
        }
    }

    #[test]
    fn channelwise_equals_block_diagonal_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for c in [1, 4, 17] {
            let x = random_tensor(&mut rng, [1, c, 3, 5, 5]);
            let cw = random_kernel(&mut rng, c, 1, [3, 3, 3]);
            let mut dense = ConvKernel::zeros(c, c, [3, 3, 3]);
            for o in 0..c {
                let at = (o * c + o) * 27;
                dense.data[at..at + 27].copy_from_slice(&cw.data[o * 27..(o + 1) * 27]);
            }
            for stride in [[1, 1, 1], [1, 2, 2]] {
                let a = conv3d(&x, &cw, &ConvParams::same([3, 3, 3], c).with_stride(stride)).unwrap();
                let b = conv3d(&x, &dense, &ConvParams::same([3, 3, 3], 1).with_stride(stride)).unwrap();
                assert!(a.max_abs_diff(&b) <= 1e-5);
            }
        }
    }

    #[test]
    fn conv_rejects_mismatches() {
        let x = Tensor5::zeros([1, 4, 2, 4, 4]);
        let k = ConvKernel::zeros(4, 3, [1, 1, 1]);
        assert!(conv3d(&x, &k, &ConvParams::same([1, 1, 1], 1)).is_err());
        let k = ConvKernel::zeros(4, 4, [3, 5, 5]);
        let p = ConvParams { stride: [1, 1, 1], padding: [0, 0, 0], groups: 1 };
        assert!(conv3d(&x, &k, &p).is_err());
        assert!(conv3d(&x, &ConvKernel::zeros(3, 1, [1, 1, 1]), &ConvParams::same([1, 1, 1], 4)).is_err());
        assert!(Tensor5::new([1, 1, 1, 2, 2], vec![0.0; 3]).is_err());
        assert!(Tensor5::new([1, 0, 1, 2, 2], vec![]).is_err());
    }

    #[test]
    fn pooling_a_constant_gives_the_constant() {
        let x = Tensor5::filled([2, 3, 4, 7, 7], 0.37);
        for row in global_avg_pool(&x) {
            assert_eq!(row.len(), 3);
            assert!(row.iter().all(|v| (v - 0.37).abs() < 1e-6));
        }
    }

    #[test]
    fn saturated_excitation_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_tensor(&mut rng, [2, 8, 2, 3, 3]);
        let reduce = LinearParams {
            in_features: 8,
            out_features: 2,
            weight: (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            bias: vec![0.1, -0.2],
        };
        let expand = LinearParams { in_features: 2, out_features: 8, weight: vec![0.0; 16], bias: vec![20.0; 8] };
        let mut y = x.clone();
        squeeze_excite(&mut y, &reduce, &expand).unwrap();
        assert!(y.max_abs_diff(&x) <= 1e-4);
    }

    fn spec_of(name: &str) -> ArchSpec {
        instantiate(&preset(name).unwrap(), &ArchConfig::default()).unwrap()
    }

    /// One block per stage, half the base widths, 4×32² input.
    fn tiny_spec() -> ArchSpec {
        let mut s = spec_of("X2D");
        s.input.frames = 4;
        s.input.resolution = 32;
        s.conv1.width = 12;
        for st in &mut s.stages {
            st.blocks = 1;
            st.out_width /= 2;
            st.bottleneck_width /= 2;
        }
        s.head.conv5_width = s.last_stage_width();
        s.head.fc1_width = 64;
        s.head.classes = 10;
        s
    }

    fn clip_for(spec: &ArchSpec, batch: usize, seed: u64) -> Tensor5 {
        let g = &spec.input;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_tensor(&mut rng, [batch, 3, g.frames, g.resolution, g.resolution])
    }

    #[test]
    fn weights_are_deterministic_and_seeded() {
        let s = spec_of("X2D");
        assert_eq!(init_weights(&s, 7).unwrap(), init_weights(&s, 7).unwrap());
        assert_ne!(init_weights(&s, 7).unwrap().layers, init_weights(&s, 8).unwrap().layers);
    }

    #[test]
    fn weight_elements_equal_param_count() {
        let mut toggles = vec![ArchConfig::default()];
        let mut c = ArchConfig::default();
        c.use_se = false;
        toggles.push(c);
        let mut c = ArchConfig::default();
        c.use_channelwise = false;
        toggles.push(c);
        for cfg in &toggles {
            for name in ["X2D", "X3D-XS", "X3D-S", "X3D-M"] {
                let s = instantiate(&preset(name).unwrap(), cfg).unwrap();
                let w = init_weights(&s, 1).unwrap();
                assert_eq!(w.element_count() as u64, count_params(&s).unwrap(), "{name}");
                assert_eq!(w.layers.len(), layer_plan(&s).len());
            }
        }
    }

    #[test]
    fn zero_input_passes_the_projected_shortcut() {
        let s = spec_of("X3D-S");
        let block = s.blocks().into_iter().find(|b| b.spec.has_projection_shortcut && b.spec.spatial_stride == 2).unwrap();
        let mut w = init_weights(&s, 3).unwrap();
        w.norm_mut(&format!("{}.norm_c", block.id)).unwrap().scale.fill(0.0);
        let shift: Vec<f32> = (0..block.spec.out_width).map(|i| i as f32 * 0.1 - 1.0).collect();
        w.norm_mut(&format!("{}.shortcut_norm", block.id)).unwrap().shift = shift.clone();
        let x = Tensor5::zeros([1, block.spec.in_width, 2, 8, 8]);
        let y = block_forward(&block, &x, &w).unwrap();
        assert_eq!(y.dims(), [1, block.spec.out_width, 2, 4, 4]);
        for c in 0..block.spec.out_width {
            let want = shift[c].max(0.0);
            assert!(y.sample(0)[c * 32..(c + 1) * 32].iter().all(|&v| (v - want).abs() < 1e-6));
        }
    }

    #[test]
    fn block_equals_composed_primitives() {
        let s = spec_of("X3D-S");
        let mut w = init_weights(&s, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for l in w.layers.values_mut() {
            if let LayerWeights::Norm(n) = l {
                n.scale.iter_mut().for_each(|v| *v = rng.gen_range(0.5..1.5));
                n.shift.iter_mut().for_each(|v| *v = rng.gen_range(-0.2..0.2));
            }
        }
        for block in s.blocks().into_iter().take(2) {
            let b = &block.spec;
            let id = |x: &str| format!("{}.{x}", block.id);
            let x = random_tensor(&mut rng, [2, b.in_width, 3, 6, 6]);
            let got = block_forward(&block, &x, &w).unwrap();

            let pw = ConvParams { stride: [1, 1, 1], padding: [0; 3], groups: 1 };
            let stride = [1, b.spatial_stride, b.spatial_stride];
            let mut y = naive_conv(&x, w.conv(&id("conv_a")).unwrap(), &pw);
            affine_norm(&mut y, w.norm(&id("norm_a")).unwrap()).unwrap();
            Activation::Swish.apply(y.as_mut_slice());
            let p = ConvParams::same([3, 3, 3], b.bottleneck_width).with_stride(stride);
            let mut y = naive_conv(&y, w.conv(&id("conv_b")).unwrap(), &p);
            affine_norm(&mut y, w.norm(&id("norm_b")).unwrap()).unwrap();
            if b.has_se {
                squeeze_excite(&mut y, w.linear(&id("se.reduce")).unwrap(), w.linear(&id("se.expand")).unwrap()).unwrap();
            }
            Activation::Swish.apply(y.as_mut_slice());
            let mut y = naive_conv(&y, w.conv(&id("conv_c")).unwrap(), &pw);
            affine_norm(&mut y, w.norm(&id("norm_c")).unwrap()).unwrap();
            let short = if b.has_projection_shortcut {
                let mut sc = naive_conv(&x, w.conv(&id("shortcut")).unwrap(), &pw.with_stride(stride));
                affine_norm(&mut sc, w.norm(&id("shortcut_norm")).unwrap()).unwrap();
                sc
            } else {
                x.clone()
            };
            add_assign(&mut y, &short).unwrap();
            Activation::Relu.apply(y.as_mut_slice());
            assert!(got.max_abs_diff(&y) <= 1e-5, "{}: {}", block.id, got.max_abs_diff(&y));
        }
    }

    #[test]
    fn x2d_forward_shapes() {
        let s = spec_of("X2D");
        let w = init_weights(&s, 7).unwrap();
        let (logits, trace) = forward_traced(&s, &w, &clip_for(&s, 2, 1)).unwrap();
        assert_eq!(logits.len(), 2);
        assert!(logits.iter().all(|r| r.len() == 400 && r.iter().all(|v| v.is_finite())));
        assert_eq!(trace, propagate_shapes(&s).unwrap());
        let hw = |id: &str| {
            let e = trace.stage_output(id).unwrap();
            (e.out_c, e.out_t, e.out_h)
        };
        assert_eq!(trace.get("conv1").map(|e| (e.out_c, e.out_h)), Some((24, 56)));
        assert_eq!(hw("res2"), (24, 1, 28));
        assert_eq!(hw("res3"), (48, 1, 14));
        assert_eq!(hw("res4"), (96, 1, 7));
        assert_eq!(hw("res5"), (192, 1, 4));
    }

    #[test]
    fn tiny_spec_smoke() {
        let s = tiny_spec();
        let w = init_weights(&s, 11).unwrap();
        let (logits, trace) = forward_traced(&s, &w, &clip_for(&s, 1, 2)).unwrap();
        assert_eq!(trace, propagate_shapes(&s).unwrap());
        assert_eq!(trace.stage_output("res5").unwrap().out_h, 1);
        assert!(logits[0].len() == 10 && logits[0].iter().all(|v| v.is_finite()));
    }

    #[test]
    fn geometry_mismatch_is_rejected() {
        let s = tiny_spec();
        let w = init_weights(&s, 1).unwrap();
        let wrong = Tensor5::zeros([1, 3, 2, 32, 32]);
        assert!(matches!(forward(&s, &w, &wrong), Err(crate::Error::ShapeMismatch(_))));
    }

    #[test]
    fn forward_is_bit_identical_across_runs_and_threads() {
        let s = spec_of("X2D");
        let w = init_weights(&s, 5).unwrap();
        let clip = clip_for(&s, 2, 3);
        let one = Engine::new(1).unwrap();
        let four = Engine::new(4).unwrap();
        let a = one.forward(&s, &w, &clip).unwrap();
        let b = one.forward(&s, &w, &clip).unwrap();
        let c = four.forward(&s, &w, &clip).unwrap();
        let bits = |v: &Vec<Vec<f32>>| v.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(bits(&a), bits(&c));
        assert_eq!(four.threads(), 4);
    }

    #[test]
    fn head_recomputation_matches_forward() {
        let s = tiny_spec();
        let w = init_weights(&s, 13).unwrap();
        let clip = clip_for(&s, 2, 4);
        let f = features(&s, &w, &clip).unwrap();
        let logits = forward(&s, &w, &clip).unwrap();
        let dense = |x: &[f64], l: &LinearParams| -> Vec<f64> {
            (0..l.out_features)
                .map(|o| {
                    l.bias[o] as f64
                        + (0..l.in_features).map(|i| l.weight[o * l.in_features + i] as f64 * x[i]).sum::<f64>()
                })
                .collect()
        };
        for (row, want) in f.iter().zip(&logits) {
            let x: Vec<f64> = row.iter().map(|&v| v as f64).collect();
            let h: Vec<f64> = dense(&x, w.linear("head.fc1").unwrap()).into_iter().map(|v| v.max(0.0)).collect();
            let y = dense(&h, w.linear("head.fc2").unwrap());
            for (a, b) in y.iter().zip(want) {
                assert!((a - *b as f64).abs() <= 1e-5, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn small_preset_feature_length() {
        let s = spec_of("X3D-S");
        let mut reduced = s.with_resolution(64);
        reduced.input.frames = 1;
        let w = init_weights(&reduced, 1).unwrap();
        let f = features(&reduced, &w, &clip_for(&reduced, 1, 5)).unwrap();
        assert_eq!(f[0].len(), 432);
    }
}
