//! The hybrid model: `y_hat = q_physi * w_physi + q_nn * w_nn`.
//!
//! `q_physi` comes from a fixed [`PhysicsModel`], `q_nn` from a trainable
//! [`Network`]. The two mixing weights are learned jointly with the network
//! and are unconstrained after initialization (no sum-to-one, no clipping).

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::nn::{Activations, Network};
use crate::physics::PhysicsModel;
use crate::scaler::{scale_features, InputScaler};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinerWeights {
    pub w_physi: f64,
    pub w_nn: f64,
}

impl Default for CombinerWeights {
    /// Physics-dominated start: `w_physi = 0.99`, `w_nn = 0.01`.
    fn default() -> Self {
        Self {
            w_physi: 0.99,
            w_nn: 0.01,
        }
    }
}

impl CombinerWeights {
    pub fn new(w_physi: f64, w_nn: f64) -> Self {
        Self { w_physi, w_nn }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.w_physi, self.w_nn]
    }

    pub fn from_array([w_physi, w_nn]: [f64; 2]) -> Self {
        Self { w_physi, w_nn }
    }

    #[inline]
    pub fn combine(&self, q_physi: f64, q_nn: f64) -> f64 {
        q_physi * self.w_physi + q_nn * self.w_nn
    }
}

/// `w_physi / w_nn`, or `None` when `w_nn` is zero.
pub fn weight_ratio(weights: &CombinerWeights) -> Option<f64> {
    (weights.w_nn != 0.0).then(|| weights.w_physi / weights.w_nn)
}

/// Chain rule through the combination for upstream `dLoss/dy_hat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinerGradients {
    pub d_w_physi: f64,
    pub d_w_nn: f64,
    /// Fed into the network's backward pass.
    pub d_q_nn: f64,
}

pub fn combiner_gradients(
    q_physi: f64,
    q_nn: f64,
    weights: &CombinerWeights,
    upstream: f64,
) -> CombinerGradients {
    CombinerGradients {
        d_w_physi: upstream * q_physi,
        d_w_nn: upstream * q_nn,
        d_q_nn: upstream * weights.w_nn,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub y_hat: f64,
    pub q_physi: f64,
    pub q_nn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysiNetModel {
    physics: PhysicsModel,
    pub net: Network,
    pub weights: CombinerWeights,
    /// Applied to network-branch inputs only; the physics branch sees raw
    /// features. `None` until fitted.
    pub scaler: Option<InputScaler>,
    /// Keeps `w_physi`, `w_nn` fixed during training.
    #[serde(default)]
    pub freeze_combiner: bool,
}

impl PhysiNetModel {
    pub fn new(physics: PhysicsModel, net: Network, weights: CombinerWeights) -> Result<Self> {
        check_len(
            "physics/network input width",
            physics.input_size(),
            net.input_size(),
        )?;
        Ok(Self {
            physics,
            net,
            weights,
            scaler: None,
            freeze_combiner: false,
        })
    }

    /// The physics branch is read-only; there is no mutable accessor.
    pub fn physics(&self) -> &PhysicsModel {
        &self.physics
    }

    pub fn predict(&self, features: &[f64]) -> Result<Prediction> {
        self.forward(features).map(|(p, _, _)| p)
    }

    /// Prediction plus what the backward pass needs.
    pub(crate) fn forward(&self, features: &[f64]) -> Result<(Prediction, Vec<f64>, Activations)> {
        let q_physi = self.physics.predict(features)?;
        let scaled = scale_features(self.scaler.as_ref(), features)?;
        let (q_nn, acts) = self.net.forward(&scaled)?;
        let y_hat = self.weights.combine(q_physi, q_nn);
        Ok((
            Prediction {
                y_hat,
                q_physi,
                q_nn,
            },
            scaled,
            acts,
        ))
    }

    pub fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot {
            physics: self.physics,
            layers: self.net.clone(),
            w_physi: self.weights.w_physi,
            w_nn: self.weights.w_nn,
            scaler: self.scaler.clone(),
        }
    }

    pub fn from_snapshot(snapshot: ModelSnapshot) -> Result<Self> {
        let mut model = Self::new(
            snapshot.physics,
            snapshot.layers,
            CombinerWeights::new(snapshot.w_physi, snapshot.w_nn),
        )?;
        if let Some(scaler) = &snapshot.scaler {
            check_len(
                "snapshot scaler width",
                model.net.input_size(),
                scaler.width(),
            )?;
        }
        model.scaler = snapshot.scaler;
        Ok(model)
    }
}

/// Flat JSON view of a [`PhysiNetModel`] for inspection and resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub physics: PhysicsModel,
    #[serde(flatten)]
    pub layers: Network,
    pub w_physi: f64,
    pub w_nn: f64,
    pub scaler: Option<InputScaler>,
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn combination_is_linear_in_weights(
            q_physi in -100.0f64..100.0,
            q_nn in -100.0f64..100.0,
            wp in -3.0f64..3.0,
            wn in -3.0f64..3.0,
            alpha in -4.0f64..4.0,
        ) {
            let base = CombinerWeights::new(wp, wn).combine(q_physi, q_nn);
            let scaled = CombinerWeights::new(alpha * wp, alpha * wn).combine(q_physi, q_nn);
            prop_assert!((scaled - alpha * base).abs() <= 1e-12 * (1.0 + scaled.abs()));
        }
    }
}
