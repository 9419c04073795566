use serde::{Deserialize, Serialize};

use crate::datagen::DataBatch;
use crate::error::{check_len, Result};

/// Fixed per-feature affine map `(x - mean) / std` for network-branch inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaler {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl InputScaler {
    pub fn identity(width: usize) -> Self {
        Self {
            mean: vec![0.0; width],
            std: vec![1.0; width],
        }
    }

    /// Population mean and standard deviation of each input column. A
    /// constant column keeps unit scale.
    pub fn fit(batch: &DataBatch) -> Self {
        let width = batch.inputs()[0].len();
        let n = batch.len() as f64;
        let mut mean = vec![0.0; width];
        for row in batch.inputs() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for row in batch.inputs() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn apply(&self, features: &[f64]) -> Result<Vec<f64>> {
        check_len("scaler input", self.width(), features.len())?;
        Ok(features
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }
}

/// Applies `scaler` when present; `None` passes features through.
pub fn scale_features(scaler: Option<&InputScaler>, features: &[f64]) -> Result<Vec<f64>> {
    match scaler {
        Some(s) => s.apply(features),
        None => Ok(features.to_vec()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_standardizes_the_fitting_batch() {
        let batch = DataBatch::from_scalars(vec![0.0, 2.0, 4.0, 6.0], vec![0.0; 4]).unwrap();
        let s = InputScaler::fit(&batch);
        assert_eq!(s.mean(), &[3.0]);
        assert!((s.std()[0] - 5.0f64.sqrt()).abs() < 1e-15);
        let z: Vec<f64> = batch
            .inputs()
            .iter()
            .map(|x| s.apply(x).unwrap()[0])
            .collect();
        assert!(z.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn constant_column_keeps_unit_scale() {
        let batch = DataBatch::from_scalars(vec![4.0; 5], vec![0.0; 5]).unwrap();
        let s = InputScaler::fit(&batch);
        assert_eq!(s.std(), &[1.0]);
        assert_eq!(s.apply(&[5.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn identity_is_a_no_op() {
        let s = InputScaler::identity(2);
        assert_eq!(s.apply(&[1.5, -2.0]).unwrap(), vec![1.5, -2.0]);
        assert!(s.apply(&[1.0]).is_err());
    }
}
