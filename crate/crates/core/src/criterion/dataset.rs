use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::arch::InputGeometry;
use crate::engine::Tensor5;
use crate::error::{Error, Result};

/// Resolution at which `bar_period` and `speeds` are given in pixels.
pub const REFERENCE_RESOLUTION: f64 = 112.0;

/// Clips of drifting bar gratings. Class `c` fixes the speed
/// (`speeds[c % 2]`), the drift direction (sign from `(c / 2) % 2`) and
/// the orientation (`c / 4`, evenly spaced over half a turn).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticDatasetSpec {
    pub num_classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub frames: usize,
    /// Source frames between sampled frames.
    pub stride: usize,
    pub resolution: usize,
    /// Drift in pixels per source frame.
    pub speeds: [f64; 2],
    pub bar_period: f64,
    /// Sine level above which a pixel is part of a bar.
    pub threshold: f64,
    /// Standard deviation of the per-clip orientation, in radians.
    pub orientation_jitter: f64,
    /// Standard deviation of the additive per-pixel noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticDatasetSpec {
    fn default() -> Self {
        Self {
            num_classes: 8,
            train_per_class: 32,
            test_per_class: 16,
            frames: 4,
            stride: 1,
            resolution: 112,
            speeds: [1.0, 2.5],
            bar_period: 10.0,
            threshold: 0.3,
            orientation_jitter: 0.05,
            noise: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl SyntheticDatasetSpec {
    pub fn with_geometry(&self, g: &InputGeometry) -> Self {
        Self {
            frames: g.frames,
            stride: g.stride,
            resolution: g.resolution,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("dataset: {m}")));
        if self.num_classes < 2 {
            return bad("at least two classes are required");
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return bad("every class needs train and test clips");
        }
        if self.frames == 0 || self.stride == 0 || self.resolution == 0 {
            return bad("geometry must be positive");
        }
        if !(self.bar_period > 0.0) || self.speeds.iter().any(|s| !s.is_finite()) {
            return bad("bar period must be positive and speeds finite");
        }
        if !(self.noise >= 0.0 && self.orientation_jitter >= 0.0) {
            return bad("noise and jitter must be non-negative");
        }
        Ok(())
    }

    pub fn per_class(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train_per_class,
            Split::Test => self.test_per_class,
        }
    }

    pub fn len(&self, split: Split) -> usize {
        self.num_classes * self.per_class(split)
    }

    pub fn is_empty(&self) -> bool {
        self.num_classes == 0
    }

    pub fn label(&self, split: Split, index: usize) -> usize {
        index / self.per_class(split)
    }

    pub fn labels(&self, split: Split) -> Vec<usize> {
        (0..self.len(split)).map(|i| self.label(split, i)).collect()
    }

    fn orientations(&self) -> usize {
        self.num_classes.div_ceil(4)
    }

    /// Writes clip `index` of `split` into `out` (`3·T·S·S` values). Each
    /// clip draws from its own stream, so clips can be produced in any
    /// order.
    fn render(&self, split: Split, index: usize, out: &mut [f32]) {
        let global = match split {
            Split::Train => index,
            Split::Test => self.len(Split::Train) + index,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(global as u64);

        let c = self.label(split, index);
        let scale = self.resolution as f64 / REFERENCE_RESOLUTION;
        let period = self.bar_period * scale;
        let speed = self.speeds[c % 2] * scale;
        let direction = if (c / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let base = (c / 4) as f64 * PI / self.orientations() as f64;
        let jitter = Normal::new(0.0, self.orientation_jitter).expect("validated jitter");
        let noise = Normal::new(0.0, self.noise).expect("validated noise");

        let phase = rng.gen_range(0.0..period);
        let theta = base + jitter.sample(&mut rng);
        let (cos, sin) = (theta.cos(), theta.sin());
        let s = self.resolution;
        let plane = self.frames * s * s;
        for t in 0..self.frames {
            let shift = direction * speed * (t * self.stride) as f64 + phase;
            for y in 0..s {
                for x in 0..s {
                    let proj = x as f64 * cos + y as f64 * sin;
                    let v = (2.0 * PI * (proj - shift) / period).sin();
                    out[(t * s + y) * s + x] = if v > self.threshold { 1.0 } else { 0.0 };
                }
            }
        }
        let (gray, rest) = out.split_at_mut(plane);
        rest[..plane].copy_from_slice(gray);
        rest[plane..].copy_from_slice(gray);
        for v in out.iter_mut() {
            *v += noise.sample(&mut rng) as f32;
        }
    }

    /// Clips `start..start + count` of `split` stacked along the batch axis.
    pub fn batch(&self, split: Split, start: usize, count: usize) -> Tensor5 {
        let s = self.resolution;
        let mut t = Tensor5::zeros([count, 3, self.frames, s, s]);
        for i in 0..count {
            self.render(split, start + i, t.sample_mut(i));
        }
        t
    }
}

/// Fully materialized train and test splits.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedDataset {
    pub train: Tensor5,
    pub train_labels: Vec<usize>,
    pub test: Tensor5,
    pub test_labels: Vec<usize>,
}

pub fn generate_dataset(spec: &SyntheticDatasetSpec) -> Result<GeneratedDataset> {
    spec.validate()?;
    Ok(GeneratedDataset {
        train: spec.batch(Split::Train, 0, spec.len(Split::Train)),
        train_labels: spec.labels(Split::Train),
        test: spec.batch(Split::Test, 0, spec.len(Split::Test)),
        test_labels: spec.labels(Split::Test),
    })
}
