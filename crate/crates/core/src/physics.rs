//! Fixed analytic predictors. Nothing in here is ever trained.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// `q = c * x + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPhysics {
    c: f64,
    d: f64,
}

impl LinearPhysics {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        if !(c.is_finite() && d.is_finite()) {
            return Err(Error::Config(format!(
                "linear law needs finite c, d; got {c}, {d}"
            )));
        }
        Ok(Self { c, d })
    }

    pub fn slope(&self) -> f64 {
        self.c
    }

    pub fn offset(&self) -> f64 {
        self.d
    }

    #[inline]
    pub fn predict(&self, x: f64) -> f64 {
        self.c * x + self.d
    }
}

/// Magnitude of `1 / (s^2 + s + a0)` on the imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderFrf {
    a0: f64,
}

impl SecondOrderFrf {
    pub fn new(a0: f64) -> Result<Self> {
        if !(a0.is_finite() && a0 > 0.0) {
            return Err(Error::Config(format!(
                "a0 must be positive and finite; got {a0}"
            )));
        }
        Ok(Self { a0 })
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// `1 / sqrt((a0 - w^2)^2 + w^2)`.
    #[inline]
    pub fn magnitude(&self, omega: f64) -> f64 {
        let w2 = omega * omega;
        let re = self.a0 - w2;
        1.0 / (re * re + w2).sqrt()
    }

    /// Resonance frequency `sqrt(a0 - 1/2)`, if the response has a peak.
    pub fn peak_frequency(&self) -> Option<f64> {
        (self.a0 > 0.5).then(|| (self.a0 - 0.5).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhysicsModel {
    Linear(LinearPhysics),
    SecondOrderFrf(SecondOrderFrf),
}

impl PhysicsModel {
    pub fn input_size(&self) -> usize {
        1
    }

    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        check_len("physics input", self.input_size(), features.len())?;
        Ok(match self {
            PhysicsModel::Linear(m) => m.predict(features[0]),
            PhysicsModel::SecondOrderFrf(m) => m.magnitude(features[0]),
        })
    }
}

impl From<LinearPhysics> for PhysicsModel {
    fn from(m: LinearPhysics) -> Self {
        PhysicsModel::Linear(m)
    }
}

impl From<SecondOrderFrf> for PhysicsModel {
    fn from(m: SecondOrderFrf) -> Self {
        PhysicsModel::SecondOrderFrf(m)
    }
}
