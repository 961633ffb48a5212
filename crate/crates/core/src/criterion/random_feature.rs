use super::dataset::{Split, SyntheticDatasetSpec};
use super::ridge::readout_accuracy;
use super::Criterion;
use crate::arch::{instantiate, ArchConfig, ArchSpec, ExpansionFactors};
use crate::cost::propagate_shapes;
use crate::engine::{features, init_weights, WeightBundle};
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 1e-2;
pub const DEFAULT_ACTIVATION_BUDGET: u64 = 200_000_000;
pub const DEFAULT_BATCH: usize = 16;

/// Activation elements one clip produces across the network: every traced
/// layer output plus the two bottleneck-width tensors inside each block.
pub fn activation_elements(spec: &ArchSpec) -> Result<u64> {
    let trace = propagate_shapes(spec)?;
    let volume = |i: usize| {
        let e = &trace.entries[i];
        (e.out_t * e.out_h * e.out_w) as u64
    };
    let mut total: u64 = (0..trace.entries.len())
        .map(|i| volume(i) * trace.entries[i].out_c as u64)
        .sum();
    for b in spec.blocks() {
        let i = trace
            .entries
            .iter()
            .position(|e| e.layer_id == b.id)
            .ok_or_else(|| Error::malformed("shape trace", format!("no entry for {}", b.id)))?;
        let width = b.spec.bottleneck_width as u64;
        total += (volume(i - 1) + volume(i)) * width;
    }
    Ok(total)
}

/// Everything `random_feature_eval` needs besides the factors.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomFeatureConfig {
    pub arch: ArchConfig,
    pub dataset: SyntheticDatasetSpec,
    pub seed: u64,
    pub lambda: f64,
    /// Largest number of activation elements a feature batch may hold.
    pub activation_budget: u64,
    pub batch: usize,
}

impl Default for RandomFeatureConfig {
    fn default() -> Self {
        Self {
            arch: ArchConfig::default(),
            dataset: SyntheticDatasetSpec::default(),
            seed: 0,
            lambda: DEFAULT_LAMBDA,
            activation_budget: DEFAULT_ACTIVATION_BUDGET,
            batch: DEFAULT_BATCH,
        }
    }
}

impl RandomFeatureConfig {
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        self.dataset.validate()?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("ridge lambda must be positive, got {}", self.lambda)));
        }
        if self.batch == 0 || self.activation_budget == 0 {
            return Err(Error::InvalidConfig("batch and activation budget must be positive".into()));
        }
        Ok(())
    }
}

/// Pooled features of the train and test clips under randomly initialized
/// weights. The dataset is rendered at the network's input geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet {
    pub train: Vec<Vec<f64>>,
    pub train_labels: Vec<usize>,
    pub test: Vec<Vec<f64>>,
    pub test_labels: Vec<usize>,
    pub classes: usize,
}

fn extract(spec: &ArchSpec, w: &WeightBundle, ds: &SyntheticDatasetSpec, split: Split, batch: usize) -> Result<Vec<Vec<f64>>> {
    let n = ds.len(split);
    let mut out = Vec::with_capacity(n);
    for start in (0..n).step_by(batch) {
        let clips = ds.batch(split, start, batch.min(n - start));
        out.extend(
            features(spec, w, &clips)?
                .into_iter()
                .map(|r| r.into_iter().map(f64::from).collect::<Vec<_>>()),
        );
    }
    Ok(out)
}

pub fn random_features(factors: &ExpansionFactors, cfg: &RandomFeatureConfig) -> Result<FeatureSet> {
    cfg.validate()?;
    let spec = instantiate(factors, &cfg.arch)?;
    let needed = activation_elements(&spec)? * cfg.batch as u64;
    if needed > cfg.activation_budget {
        return Err(Error::BudgetExceeded {
            needed,
            budget: cfg.activation_budget,
        });
    }
    let ds = cfg.dataset.with_geometry(&spec.input);
    let w = init_weights(&spec, cfg.seed)?;
    Ok(FeatureSet {
        train: extract(&spec, &w, &ds, Split::Train, cfg.batch)?,
        train_labels: ds.labels(Split::Train),
        test: extract(&spec, &w, &ds, Split::Test, cfg.batch)?,
        test_labels: ds.labels(Split::Test),
        classes: ds.num_classes,
    })
}

impl FeatureSet {
    pub fn accuracy(&self, lambda: f64) -> Result<f64> {
        readout_accuracy(&self.train, &self.train_labels, &self.test, &self.test_labels, self.classes, lambda)
    }
}

/// Test accuracy of a ridge readout over random features of the network
/// built from `factors`.
pub fn random_feature_eval(factors: &ExpansionFactors, cfg: &RandomFeatureConfig) -> Result<f64> {
    random_features(factors, cfg)?.accuracy(cfg.lambda)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomFeatureCriterion {
    pub config: RandomFeatureConfig,
}

impl Criterion for RandomFeatureCriterion {
    fn id(&self) -> String {
        format!(
            "random_feature:seed={},data_seed={},lambda={}",
            self.config.seed, self.config.dataset.seed, self.config.lambda
        )
    }

    fn is_pure(&self) -> bool {
        true
    }

    fn score(&self, f: &ExpansionFactors) -> Result<f64> {
        random_feature_eval(f, &self.config)
    }
}
