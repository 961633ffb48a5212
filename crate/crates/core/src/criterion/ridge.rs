use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Per-dimension standardization fitted on training rows. Dimensions with
/// no variance map to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// `1 / std`, or zero for constant dimensions.
    pub inv_std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let inv_std = var
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 * m.abs().max(1.0) {
                    1.0 / sd
                } else {
                    0.0
                }
            })
            .collect();
        Self { mean, inv_std }
    }

    pub fn is_degenerate(&self) -> bool {
        self.inv_std.iter().all(|&s| s == 0.0)
    }

    /// Standardized row with a trailing bias column of one.
    pub fn design_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.inv_std)
            .map(|((v, m), s)| (v - m) * s)
            .chain(std::iter::once(1.0))
            .collect()
    }
}

/// `argmin ‖A W − Y‖² + λ‖W‖²`, solved through the `d×d` normal equations
/// when `d ≤ n` and through the `n×n` kernel form otherwise.
pub fn ridge_solve(a: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("ridge lambda must be positive, got {lambda}")));
    }
    if a.nrows() != y.nrows() {
        return Err(Error::ShapeMismatch(format!("{} design rows, {} targets", a.nrows(), y.nrows())));
    }
    let singular = || Error::Criterion("ridge system is not positive definite".into());
    let (n, d) = a.shape();
    if d <= n {
        let gram = a.tr_mul(a) + DMatrix::identity(d, d) * lambda;
        let chol = gram.cholesky().ok_or_else(singular)?;
        Ok(chol.solve(&a.tr_mul(y)))
    } else {
        let kernel = a * a.transpose() + DMatrix::identity(n, n) * lambda;
        let chol = kernel.cholesky().ok_or_else(singular)?;
        Ok(a.tr_mul(&chol.solve(y)))
    }
}

/// One-vs-all linear readout with ±1 targets on standardized features.
#[derive(Clone, Debug)]
pub struct RidgeReadout {
    pub standardizer: Standardizer,
    /// `(d + 1) × classes`, bias in the last row.
    pub weights: DMatrix<f64>,
}

impl RidgeReadout {
    /// `None` when every feature dimension is constant on the training set.
    pub fn fit(features: &[Vec<f64>], labels: &[usize], classes: usize, lambda: f64) -> Result<Option<Self>> {
        if features.len() != labels.len() || features.is_empty() {
            return Err(Error::ShapeMismatch(format!("{} feature rows, {} labels", features.len(), labels.len())));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::ShapeMismatch(format!("label {l} outside {classes} classes")));
        }
        let standardizer = Standardizer::fit(features);
        if standardizer.is_degenerate() {
            return Ok(None);
        }
        let d = standardizer.mean.len() + 1;
        let rows: Vec<f64> = features.iter().flat_map(|r| standardizer.design_row(r)).collect();
        let a = DMatrix::from_row_slice(features.len(), d, &rows);
        let y = DMatrix::from_fn(labels.len(), classes, |i, c| if labels[i] == c { 1.0 } else { -1.0 });
        let weights = ridge_solve(&a, &y, lambda)?;
        Ok(Some(Self { standardizer, weights }))
    }

    /// Class with the highest response; the lowest index wins ties.
    pub fn predict(&self, row: &[f64]) -> usize {
        let x = self.standardizer.design_row(row);
        let mut best = (0, f64::NEG_INFINITY);
        for c in 0..self.weights.ncols() {
            let s: f64 = x.iter().enumerate().map(|(i, v)| v * self.weights[(i, c)]).sum();
            if s > best.1 {
                best = (c, s);
            }
        }
        best.0
    }
}

/// Test accuracy of a readout fitted on the training features; chance
/// level when the training features carry no variance.
pub fn readout_accuracy(
    train: &[Vec<f64>],
    train_labels: &[usize],
    test: &[Vec<f64>],
    test_labels: &[usize],
    classes: usize,
    lambda: f64,
) -> Result<f64> {
    let Some(model) = RidgeReadout::fit(train, train_labels, classes, lambda)? else {
        return Ok(1.0 / classes as f64);
    };
    if test.is_empty() || test.len() != test_labels.len() {
        return Err(Error::ShapeMismatch(format!("{} test rows, {} labels", test.len(), test_labels.len())));
    }
    let hits = test.iter().zip(test_labels).filter(|(r, &l)| model.predict(r) == l).count();
    Ok(hits as f64 / test.len() as f64)
}
