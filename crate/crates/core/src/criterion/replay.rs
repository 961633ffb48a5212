use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::Criterion;
use crate::arch::ExpansionFactors;
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
struct Row {
    gamma_tau: f64,
    gamma_t: f64,
    gamma_s: f64,
    gamma_w: f64,
    gamma_b: f64,
    gamma_d: f64,
    score: f64,
}

/// Scores looked up by the canonical six-decimal factor key. Lookups never
/// interpolate.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayTable {
    pub source: String,
    pub scores: BTreeMap<String, f64>,
}

impl ReplayTable {
    pub fn from_reader<R: Read>(input: R, source: impl Into<String>) -> Result<Self> {
        let mut scores = BTreeMap::new();
        for row in csv::Reader::from_reader(input).deserialize() {
            let r: Row = row?;
            let f = ExpansionFactors {
                gamma_tau: r.gamma_tau,
                gamma_t: r.gamma_t,
                gamma_s: r.gamma_s,
                gamma_w: r.gamma_w,
                gamma_b: r.gamma_b,
                gamma_d: r.gamma_d,
                ..ExpansionFactors::unit()
            };
            let key = f.canonical_key();
            if scores.insert(key.clone(), r.score).is_some() {
                return Err(Error::malformed("replay table", format!("duplicate key {key}")));
            }
        }
        Ok(Self { source: source.into(), scores })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file), path.display().to_string())
    }

    pub fn lookup(&self, f: &ExpansionFactors) -> Result<f64> {
        let key = f.canonical_key();
        self.scores.get(&key).copied().ok_or(Error::MissingReplayKey(key))
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl Criterion for ReplayTable {
    fn id(&self) -> String {
        format!("replay:{}", self.source)
    }

    fn is_pure(&self) -> bool {
        true
    }

    fn score(&self, f: &ExpansionFactors) -> Result<f64> {
        self.lookup(f)
    }
}
