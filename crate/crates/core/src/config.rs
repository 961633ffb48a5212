//! Run configuration for the `expand` command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::arch::{preset, ArchConfig, ExpansionFactors};
use crate::criterion::{CriterionSpec, CriterionVariant};
use crate::error::{Error, Result};
use crate::expansion::{ExpansionSettings, Regime};

/// Environment variable consulted for the worker count.
pub const THREADS_ENV: &str = "X3D_FORGE_THREADS";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub trajectory: Option<PathBuf>,
    /// Spec of the selected instance.
    pub spec: Option<PathBuf>,
    pub curve: Option<PathBuf>,
}

/// A complete expansion run. `start` names a preset and `factors` gives an
/// override list; X2D is used when both are absent. Exactly one of
/// `target_gflops` and `regime` must be set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub start: Option<String>,
    pub factors: Option<String>,
    pub target_gflops: Option<f64>,
    pub regime: Option<Regime>,
    pub threads: Option<usize>,
    pub settings: ExpansionSettings,
    pub criterion: CriterionSpec,
    pub arch: ArchConfig,
    pub output: OutputPaths,
}

/// Where the run should stop and what it should select.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunTarget {
    Flops(u64),
    Regime(Regime),
}

impl RunTarget {
    pub fn flops(self) -> u64 {
        match self {
            RunTarget::Flops(f) => f,
            RunTarget::Regime(r) => r.bound_flops(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: RunConfig = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Reads `path` and resolves relative file references against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c: RunConfig = toml::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
        };
        resolve(&mut c.criterion.table);
        resolve(&mut c.output.trajectory);
        resolve(&mut c.output.spec);
        resolve(&mut c.output.curve);
        c.validate()?;
        if let Some(t) = c.criterion.table.as_ref().filter(|t| !t.is_file()) {
            return Err(Error::InvalidConfig(format!("replay table {} does not exist", t.display())));
        }
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.start.is_some() && self.factors.is_some() {
            return Err(Error::InvalidConfig("give either `start` or `factors`, not both".into()));
        }
        self.target()?;
        self.start_factors()?;
        self.settings.validate()?;
        self.arch.validate()?;
        self.criterion.validate()?;
        if self.criterion.variant == CriterionVariant::Replay && self.criterion.table.is_none() {
            return Err(Error::InvalidConfig("replay criterion needs a table".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn target(&self) -> Result<RunTarget> {
        match (self.target_gflops, self.regime) {
            (Some(g), None) if g.is_finite() && g > 0.0 => Ok(RunTarget::Flops((g * 1e9).round() as u64)),
            (Some(g), None) => Err(Error::InvalidConfig(format!("target_gflops must be positive, got {g}"))),
            (None, Some(r)) => Ok(RunTarget::Regime(r)),
            _ => Err(Error::InvalidConfig("set exactly one of `target_gflops` and `regime`".into())),
        }
    }

    pub fn start_factors(&self) -> Result<ExpansionFactors> {
        match (&self.start, &self.factors) {
            (Some(name), _) => preset(name),
            (None, Some(list)) => ExpansionFactors::parse_overrides(list),
            (None, None) => Ok(ExpansionFactors::unit()),
        }
    }
}

/// Worker count: an explicit value, else the environment variable, else
/// the configured value, else the available parallelism.
pub fn resolve_threads(explicit: Option<usize>, configured: Option<usize>) -> Result<usize> {
    if let Some(n) = explicit {
        return Ok(n);
    }
    if let Ok(v) = std::env::var(THREADS_ENV) {
        return v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidConfig(format!("{THREADS_ENV}=`{v}` is not a positive integer")));
    }
    Ok(configured.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = RunConfig::from_toml("regime = \"S\"\n").unwrap();
        assert_eq!(c.target().unwrap().flops(), 2_000_000_000);
        assert_eq!(c.start_factors().unwrap(), ExpansionFactors::unit());
    }

    #[test]
    fn target_must_be_exclusive() {
        assert!(RunConfig::from_toml("").is_err());
        assert!(RunConfig::from_toml("regime = \"S\"\ntarget_gflops = 1.0\n").is_err());
        assert!(RunConfig::from_toml("target_gflops = -1.0\n").is_err());
    }

    #[test]
    fn start_and_factors_are_exclusive() {
        assert!(RunConfig::from_toml("regime = \"S\"\nstart = \"X2D\"\nfactors = \"gamma_b=2\"\n").is_err());
        let c = RunConfig::from_toml("target_gflops = 0.1\nfactors = \"gamma_b=2.25\"\n").unwrap();
        assert_eq!(c.start_factors().unwrap().gamma_b, 2.25);
    }

    #[test]
    fn nested_sections_parse() {
        let text = r#"
            start = "X2D"
            regime = "XS"
            threads = 2

            [settings]
            c_hat = 2.0
            enabled_axes = ["bottleneck", "depth"]
            max_steps = 8

            [criterion]
            variant = "analytic"
            seed = 7

            [output]
            trajectory = "t.csv"
        "#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.settings.max_steps, 8);
        assert_eq!(c.criterion.seed, 7);
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        assert!(RunConfig::from_toml("regime = \"S\"\n[settings]\nc_hat = 0.5\n").is_err());
        assert!(RunConfig::from_toml("regime = \"S\"\nunknown = 1\n").is_err());
    }

    #[test]
    fn load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "regime = \"S\"\n[output]\ntrajectory = \"out/t.csv\"\n").unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.output.trajectory.unwrap(), dir.path().join("out/t.csv"));

        std::fs::write(&path, "regime = \"S\"\n[criterion]\nvariant = \"replay\"\ntable = \"missing.csv\"\n").unwrap();
        assert!(RunConfig::load(&path).is_err());
    }

    #[test]
    fn explicit_threads_win() {
        assert_eq!(resolve_threads(Some(3), Some(5)).unwrap(), 3);
    }
}
