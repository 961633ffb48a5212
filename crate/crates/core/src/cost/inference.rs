use serde::{Deserialize, Serialize};

use super::count::count_flops;
use crate::arch::{nearest_multiple, ArchSpec};
use crate::error::{Error, Result};

/// Shorter-side size the frames are scaled to before cropping, at unit
/// spatial scale.
pub const TEST_SCALE_BASE: f64 = 128.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceStrategy {
    /// `K` uniformly sampled clips, one center crop at the native resolution.
    KCenter,
    /// `K` clips, three crops covering the long side at the test scale.
    KLeftCenterRight,
}

impl std::str::FromStr for InferenceStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "center" | "k-center" | "kcenter" => Ok(Self::KCenter),
            "lcr" | "left-center-right" | "k-leftcenterright" | "kleftcenterright" => {
                Ok(Self::KLeftCenterRight)
            }
            other => Err(Error::InvalidConfig(format!("unknown inference strategy `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceCost {
    pub crop: usize,
    pub per_view_flops: u64,
    pub views: u64,
    pub total: u64,
}

/// Video-level cost: per-view multiply-adds times the number of views.
pub fn inference_cost(spec: &ArchSpec, strategy: InferenceStrategy, clips: u64) -> Result<InferenceCost> {
    if clips == 0 {
        return Err(Error::InvalidConfig("at least one clip is required".into()));
    }
    let (crop, views) = match strategy {
        InferenceStrategy::KCenter => (spec.input.resolution, clips),
        InferenceStrategy::KLeftCenterRight => (
            nearest_multiple(TEST_SCALE_BASE * spec.input.spatial_scale, 8),
            3 * clips,
        ),
    };
    let per_view_flops = count_flops(&spec.with_resolution(crop))?;
    Ok(InferenceCost {
        crop,
        per_view_flops,
        views,
        total: per_view_flops * views,
    })
}
