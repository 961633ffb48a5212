//! Goodness functions scored during expansion.

mod analytic;
mod dataset;
mod random_feature;
mod replay;
mod ridge;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use analytic::{AnalyticOracle, DEFAULT_BETAS};
pub use dataset::{generate_dataset, GeneratedDataset, Split, SyntheticDatasetSpec, REFERENCE_RESOLUTION};
pub use random_feature::{
    activation_elements, random_feature_eval, random_features, FeatureSet, RandomFeatureConfig, RandomFeatureCriterion,
    DEFAULT_ACTIVATION_BUDGET, DEFAULT_BATCH, DEFAULT_LAMBDA,
};
pub use replay::ReplayTable;
pub use ridge::{readout_accuracy, ridge_solve, RidgeReadout, Standardizer};

use crate::arch::{ArchConfig, ExpansionFactors};
use crate::error::{Error, Result};

/// Scores a set of expansion factors; higher is better.
pub trait Criterion: Sync {
    fn id(&self) -> String;

    /// Pure criteria return the same score for the same factors and may be
    /// evaluated concurrently.
    fn is_pure(&self) -> bool;

    fn score(&self, f: &ExpansionFactors) -> Result<f64>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionVariant {
    #[default]
    Analytic,
    Replay,
    RandomFeature,
}

/// Serializable choice of criterion. `weights` and `betas` are listed in
/// axis order fast, temporal, spatial, width, bottleneck, depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriterionSpec {
    pub variant: CriterionVariant,
    pub seed: u64,
    pub weights: [f64; 6],
    pub betas: [f64; 6],
    pub table: Option<PathBuf>,
    pub dataset: SyntheticDatasetSpec,
    pub lambda: f64,
    pub activation_budget: u64,
    pub batch: usize,
}

impl Default for CriterionSpec {
    fn default() -> Self {
        let oracle = AnalyticOracle::default();
        Self {
            variant: CriterionVariant::Analytic,
            seed: 0,
            weights: oracle.weights,
            betas: oracle.betas,
            table: None,
            dataset: SyntheticDatasetSpec::default(),
            lambda: DEFAULT_LAMBDA,
            activation_budget: DEFAULT_ACTIVATION_BUDGET,
            batch: DEFAULT_BATCH,
        }
    }
}

impl CriterionSpec {
    pub fn validate(&self) -> Result<()> {
        match self.variant {
            CriterionVariant::Analytic => AnalyticOracle::new(self.weights, self.betas).map(|_| ()),
            CriterionVariant::Replay => match &self.table {
                Some(_) => Ok(()),
                None => Err(Error::InvalidConfig("replay criterion needs a table path".into())),
            },
            CriterionVariant::RandomFeature => self.random_feature_config(&ArchConfig::default()).validate(),
        }
    }

    pub fn random_feature_config(&self, arch: &ArchConfig) -> RandomFeatureConfig {
        RandomFeatureConfig {
            arch: arch.clone(),
            dataset: self.dataset.clone(),
            seed: self.seed,
            lambda: self.lambda,
            activation_budget: self.activation_budget,
            batch: self.batch,
        }
    }

    pub fn build(&self, arch: &ArchConfig) -> Result<Box<dyn Criterion>> {
        self.validate()?;
        Ok(match self.variant {
            CriterionVariant::Analytic => Box::new(AnalyticOracle::new(self.weights, self.betas)?),
            CriterionVariant::Replay => Box::new(ReplayTable::load(self.table.as_deref().expect("validated"))?),
            CriterionVariant::RandomFeature => Box::new(RandomFeatureCriterion {
                config: self.random_feature_config(arch),
            }),
        })
    }
}
