use super::factors::ExpansionFactors;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub factors: ExpansionFactors,
    /// Width factor as quoted alongside the published instance, which is
    /// relative to a 12-channel base rather than the 24-channel stem.
    pub published_gamma_w: f64,
}

pub const PRESET_NAMES: [&str; 5] = ["X2D", "X3D-XS", "X3D-S", "X3D-M", "X3D-XL"];

fn factors(tau: f64, t: f64, s: f64, w: f64, b: f64, d: f64) -> ExpansionFactors {
    ExpansionFactors {
        gamma_tau: tau,
        gamma_t: t,
        gamma_s: s,
        gamma_w: w,
        gamma_b: b,
        gamma_d: d,
        ..ExpansionFactors::unit()
    }
}

pub fn presets() -> Vec<Preset> {
    let sqrt2 = std::f64::consts::SQRT_2;
    vec![
        Preset {
            name: "X2D",
            factors: ExpansionFactors::unit(),
            published_gamma_w: 1.0,
        },
        Preset {
            name: "X3D-XS",
            factors: factors(12.0, 4.0, sqrt2, 1.0, 2.25, 2.2),
            published_gamma_w: 1.0,
        },
        Preset {
            name: "X3D-S",
            factors: factors(6.0, 13.0, sqrt2, 1.0, 2.25, 2.2),
            published_gamma_w: 1.0,
        },
        Preset {
            name: "X3D-M",
            factors: factors(5.0, 16.0, 2.0, 1.0, 2.25, 2.2),
            published_gamma_w: 1.0,
        },
        Preset {
            name: "X3D-XL",
            factors: ExpansionFactors {
                // 112 * 2 * sqrt(2) rounds to 320; the published input is 312
                resolution_override: Some(312),
                ..factors(5.0, 16.0, 2.0 * sqrt2, 1.45, 2.25, 5.0)
            },
            published_gamma_w: 2.9,
        },
    ]
}

fn normalize(name: &str) -> String {
    name.trim().to_ascii_uppercase().replace('_', "-")
}

pub fn find_preset(name: &str) -> Result<Preset> {
    let key = normalize(name);
    let key = match key.as_str() {
        "XS" | "S" | "M" | "XL" => format!("X3D-{key}"),
        _ => key,
    };
    presets()
        .into_iter()
        .find(|p| p.name == key)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

/// Factors of a named preset.
pub fn preset(name: &str) -> Result<ExpansionFactors> {
    find_preset(name).map(|p| p.factors)
}
