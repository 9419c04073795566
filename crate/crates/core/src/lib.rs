//! Hybrid physics + neural network regression for digital twins.
//!
//! A fixed analytic predictor and a small feedforward network are mixed by
//! two learned scalar weights. The [`trainer`] module runs the streaming
//! lifecycle protocol: each step a fresh batch of measurements arrives, the
//! trainable models fit it, and every model variant is scored on a held-out
//! test set.

pub mod combiner;
pub mod datagen;
pub mod error;
pub mod nn;
pub mod physics;
pub mod rng;
pub mod scaler;
pub mod trainer;

pub use combiner::{
    combiner_gradients, weight_ratio, CombinerWeights, ModelSnapshot, PhysiNetModel, Prediction,
};
pub use datagen::{sample_case1, sample_case2, Case1Config, Case2Config, DataBatch};
pub use error::{Error, Result};
pub use nn::{finite_diff_grad, AdamConfig, AdamState, Gradients, Network, NetworkConfig};
pub use physics::{LinearPhysics, PhysicsModel, SecondOrderFrf};
pub use rng::Rng;
pub use trainer::{
    evaluate, mse, run_lifecycle, run_lifecycle_with, train_one_step, LifecycleReport, NnOnlyModel,
    PredictionSnapshot, Scenario, StepRecord, TrainerConfig, Variant,
};
