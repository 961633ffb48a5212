use super::Criterion;
use crate::arch::{Axis, ExpansionFactors};
use crate::error::{Error, Result};

/// Diminishing-returns exponents in `Axis::ALL` order.
pub const DEFAULT_BETAS: [f64; 6] = [0.7, 0.9, 0.8, 0.5, 1.0, 0.4];

/// Closed-form score `Σ w_a (1 − E_a^−β_a)` over the cumulative expansion
/// magnitudes `E_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticOracle {
    pub weights: [f64; 6],
    pub betas: [f64; 6],
}

impl Default for AnalyticOracle {
    fn default() -> Self {
        Self {
            weights: [1.0 / 6.0; 6],
            betas: DEFAULT_BETAS,
        }
    }
}

impl AnalyticOracle {
    pub fn new(weights: [f64; 6], betas: [f64; 6]) -> Result<Self> {
        let o = Self { weights, betas };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "analytic weights must be non-negative and sum to 1, got {:?}",
                self.weights
            )));
        }
        if self.betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::InvalidConfig(format!("analytic exponents must be positive, got {:?}", self.betas)));
        }
        Ok(())
    }

    pub fn evaluate(&self, f: &ExpansionFactors) -> f64 {
        Axis::ALL
            .iter()
            .map(|&a| {
                let i = a.index();
                self.weights[i] * (1.0 - f.cumulative(a).powf(-self.betas[i]))
            })
            .sum()
    }
}

impl Criterion for AnalyticOracle {
    fn id(&self) -> String {
        "analytic".into()
    }

    fn is_pure(&self) -> bool {
        true
    }

    fn score(&self, f: &ExpansionFactors) -> Result<f64> {
        if let Some((a, e)) = f.cumulative.iter().find(|(_, e)| **e < 1.0) {
            return Err(Error::Criterion(format!("cumulative magnitude for {a} is {e} < 1")));
        }
        Ok(self.evaluate(f))
    }
}
