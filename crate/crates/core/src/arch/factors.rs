use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the six expansion axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Fast,
    Temporal,
    Spatial,
    Width,
    Bottleneck,
    Depth,
}

impl Axis {
    pub const ALL: [Axis; 6] = [
        Axis::Fast,
        Axis::Temporal,
        Axis::Spatial,
        Axis::Width,
        Axis::Bottleneck,
        Axis::Depth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Fast => "fast",
            Axis::Temporal => "temporal",
            Axis::Spatial => "spatial",
            Axis::Width => "width",
            Axis::Bottleneck => "bottleneck",
            Axis::Depth => "depth",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fast" | "x-fast" => Ok(Axis::Fast),
            "temporal" | "x-temporal" => Ok(Axis::Temporal),
            "spatial" | "x-spatial" => Ok(Axis::Spatial),
            "width" | "x-width" => Ok(Axis::Width),
            "bottleneck" | "x-bottleneck" => Ok(Axis::Bottleneck),
            "depth" | "x-depth" => Ok(Axis::Depth),
            other => Err(Error::InvalidConfig(format!("unknown axis `{other}`"))),
        }
    }
}

/// The six expansion factors plus per-axis cumulative expansion magnitudes.
///
/// `gamma_w` follows the base-table convention: `1.0` yields a 24-channel
/// stem. Widths are derived from a 12-channel base with multiplier
/// `2 * gamma_w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFactors {
    pub gamma_tau: f64,
    pub gamma_t: f64,
    pub gamma_s: f64,
    pub gamma_w: f64,
    pub gamma_b: f64,
    pub gamma_d: f64,
    #[serde(default = "unit_cumulative")]
    pub cumulative: BTreeMap<Axis, f64>,
    /// Explicit input resolution used instead of rounding `112 * gamma_s`.
    /// Cleared whenever the spatial axis is expanded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution_override: Option<usize>,
}

fn unit_cumulative() -> BTreeMap<Axis, f64> {
    Axis::ALL.iter().map(|&a| (a, 1.0)).collect()
}

impl Default for ExpansionFactors {
    fn default() -> Self {
        Self::unit()
    }
}

impl ExpansionFactors {
    /// All factors equal to one: the single-frame base network.
    pub fn unit() -> Self {
        Self {
            gamma_tau: 1.0,
            gamma_t: 1.0,
            gamma_s: 1.0,
            gamma_w: 1.0,
            gamma_b: 1.0,
            gamma_d: 1.0,
            cumulative: unit_cumulative(),
            resolution_override: None,
        }
    }

    pub fn new(
        gamma_tau: f64,
        gamma_t: f64,
        gamma_s: f64,
        gamma_w: f64,
        gamma_b: f64,
        gamma_d: f64,
    ) -> Result<Self> {
        let f = Self {
            gamma_tau,
            gamma_t,
            gamma_s,
            gamma_w,
            gamma_b,
            gamma_d,
            ..Self::unit()
        };
        f.validate()?;
        Ok(f)
    }

    pub fn gammas(&self) -> [f64; 6] {
        [
            self.gamma_tau,
            self.gamma_t,
            self.gamma_s,
            self.gamma_w,
            self.gamma_b,
            self.gamma_d,
        ]
    }

    /// Cumulative expansion magnitude along `axis` (1.0 when untouched).
    pub fn cumulative(&self, axis: Axis) -> f64 {
        self.cumulative.get(&axis).copied().unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        const NAMES: [&str; 6] = ["gamma_tau", "gamma_t", "gamma_s", "gamma_w", "gamma_b", "gamma_d"];
        for (name, value) in NAMES.iter().zip(self.gammas()) {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidFactors(format!("{name} must be a positive finite number, got {value}")));
            }
        }
        for (axis, &m) in &self.cumulative {
            if !(m.is_finite() && m >= 1.0) {
                return Err(Error::InvalidFactors(format!(
                    "cumulative magnitude for {axis} must be >= 1, got {m}"
                )));
            }
        }
        if self.resolution_override == Some(0) {
            return Err(Error::InvalidFactors("resolution override must be positive".into()));
        }
        Ok(())
    }

    /// Parse a comma-separated override list such as `γb=2.25,gamma_t=4`.
    /// Unspecified factors stay at one.
    pub fn parse_overrides(list: &str) -> Result<Self> {
        let mut f = Self::unit();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidFactors(format!("expected key=value, got `{item}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidFactors(format!("`{value}` is not a number")))?;
            let slot = match key.trim() {
                "γτ" | "gamma_tau" | "tau" => &mut f.gamma_tau,
                "γt" | "gamma_t" | "t" => &mut f.gamma_t,
                "γs" | "gamma_s" | "s" => &mut f.gamma_s,
                "γw" | "gamma_w" | "w" => &mut f.gamma_w,
                "γb" | "gamma_b" | "b" => &mut f.gamma_b,
                "γd" | "gamma_d" | "d" => &mut f.gamma_d,
                other => return Err(Error::InvalidFactors(format!("unknown factor `{other}`"))),
            };
            *slot = value;
        }
        f.validate()?;
        Ok(f)
    }

    /// Key used by replay tables: the six factors at six decimals.
    pub fn canonical_key(&self) -> String {
        self.gammas()
            .iter()
            .map(|g| format!("{g:.6}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_override_defaults_to_one() {
        let f = ExpansionFactors::parse_overrides("γb=2.25, gamma_t=4").unwrap();
        assert_eq!(f.gamma_b, 2.25);
        assert_eq!(f.gamma_t, 4.0);
        assert_eq!(f.gamma_tau, 1.0);
        assert_eq!(f.gamma_s, 1.0);
        assert_eq!(f.gamma_w, 1.0);
        assert_eq!(f.gamma_d, 1.0);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(ExpansionFactors::parse_overrides("d=0").is_err());
        assert!(ExpansionFactors::parse_overrides("w=-1").is_err());
        assert!(ExpansionFactors::parse_overrides("q=2").is_err());
        assert!(ExpansionFactors::new(1.0, f64::NAN, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn canonical_key_is_fixed_precision() {
        let f = ExpansionFactors::parse_overrides("s=1.41421356").unwrap();
        assert_eq!(
            f.canonical_key(),
            "1.000000,1.000000,1.414214,1.000000,1.000000,1.000000"
        );
    }
}
