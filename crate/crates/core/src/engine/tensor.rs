use crate::error::{Error, Result};

/// Dense `f32` activation volume laid out as `N, C, T, H, W` (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor5 {
    dims: [usize; 5],
    data: Vec<f32>,
}

impl Tensor5 {
    pub fn new(dims: [usize; 5], data: Vec<f32>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::ShapeMismatch(format!("tensor dims must be positive, got {dims:?}")));
        }
        let len: usize = dims.iter().product();
        if data.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "{} values for dims {dims:?} (expected {len})",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    /// # Panics
    /// If any dimension is zero.
    pub fn zeros(dims: [usize; 5]) -> Self {
        assert!(dims.iter().all(|&d| d > 0), "tensor dims must be positive, got {dims:?}");
        Self { dims, data: vec![0.0; dims.iter().product()] }
    }

    pub fn filled(dims: [usize; 5], value: f32) -> Self {
        let mut t = Self::zeros(dims);
        t.data.fill(value);
        t
    }

    pub fn from_fn(dims: [usize; 5], mut f: impl FnMut([usize; 5]) -> f32) -> Self {
        let mut t = Self::zeros(dims);
        let [n, c, d, h, w] = dims;
        let mut i = 0;
        for a in 0..n {
            for b in 0..c {
                for z in 0..d {
                    for y in 0..h {
                        for x in 0..w {
                            t.data[i] = f([a, b, z, y, x]);
                            i += 1;
                        }
                    }
                }
            }
        }
        t
    }

    pub fn dims(&self) -> [usize; 5] {
        self.dims
    }

    pub fn batch(&self) -> usize {
        self.dims[0]
    }

    pub fn channels(&self) -> usize {
        self.dims[1]
    }

    /// `T·H·W`, the number of positions in one channel plane.
    pub fn volume(&self) -> usize {
        self.dims[2] * self.dims[3] * self.dims[4]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn offset(&self, idx: [usize; 5]) -> usize {
        let [_, c, t, h, w] = self.dims;
        (((idx[0] * c + idx[1]) * t + idx[2]) * h + idx[3]) * w + idx[4]
    }

    pub fn get(&self, idx: [usize; 5]) -> f32 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: [usize; 5], v: f32) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    /// The `C·T·H·W` slice of sample `n`.
    pub fn sample(&self, n: usize) -> &[f32] {
        let s = self.data.len() / self.dims[0];
        &self.data[n * s..(n + 1) * s]
    }

    pub fn sample_mut(&mut self, n: usize) -> &mut [f32] {
        let s = self.data.len() / self.dims[0];
        &mut self.data[n * s..(n + 1) * s]
    }

    pub fn max_abs_diff(&self, other: &Tensor5) -> f32 {
        assert_eq!(self.dims, other.dims);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f32::max)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
