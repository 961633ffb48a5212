use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer categories used by the complexity breakdown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Conv,
    Fc,
    Se,
    Norm,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Conv, Category::Fc, Category::Se, Category::Norm];

    pub fn name(self) -> &'static str {
        match self {
            Category::Conv => "conv",
            Category::Fc => "fc",
            Category::Se => "se",
            Category::Norm => "norm",
        }
    }
}

/// Which categories contribute to the FLOP and parameter totals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountConvention {
    pub flops: Vec<Category>,
    pub params: Vec<Category>,
}

impl Default for CountConvention {
    /// Multiply-adds of conv and fc layers only; parameters of everything
    /// that carries weights (norm affine pairs included, running statistics
    /// excluded).
    fn default() -> Self {
        Self {
            flops: vec![Category::Conv, Category::Fc],
            params: Category::ALL.to_vec(),
        }
    }
}

impl CountConvention {
    pub fn counts_flops(&self, c: Category) -> bool {
        self.flops.contains(&c)
    }

    pub fn counts_params(&self, c: Category) -> bool {
        self.params.contains(&c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchConfig {
    pub num_classes: usize,
    /// Width of the first fully connected head layer.
    pub head_width: usize,
    pub use_channelwise: bool,
    pub use_se: bool,
    pub se_every: usize,
    pub se_ratio: f64,
    pub use_swish: bool,
    pub count_convention: CountConvention,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            num_classes: 400,
            head_width: 2048,
            use_channelwise: true,
            use_se: true,
            se_every: 2,
            se_ratio: 1.0 / 16.0,
            use_swish: true,
            count_convention: CountConvention::default(),
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.head_width == 0 {
            return Err(Error::InvalidConfig("num_classes and head_width must be positive".into()));
        }
        if !(self.se_ratio > 0.0 && self.se_ratio <= 1.0) {
            return Err(Error::InvalidConfig(format!("se_ratio must lie in (0, 1], got {}", self.se_ratio)));
        }
        if self.se_every == 0 {
            return Err(Error::InvalidConfig("se_every must be >= 1".into()));
        }
        Ok(())
    }
}
