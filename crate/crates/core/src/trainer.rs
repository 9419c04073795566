//! Digital-twin lifecycle: a fresh measurement batch arrives each step, the
//! trainable variants fit it for a fixed number of epochs, and all variants
//! are scored on one held-out test set.

use serde::{Deserialize, Serialize};

use crate::combiner::{combiner_gradients, weight_ratio, CombinerWeights, PhysiNetModel};
use crate::datagen::{sample_case1, sample_case2, Case1Config, Case2Config, DataBatch};
use crate::error::{Error, Result};
use crate::nn::{AdamConfig, AdamState, Gradients, Network, NetworkConfig};
use crate::physics::PhysicsModel;
use crate::rng::Rng;
use crate::scaler::{scale_features, InputScaler};

/// Anything that maps a feature vector to a scalar prediction.
pub trait Predictor {
    fn predict_value(&self, features: &[f64]) -> Result<f64>;
}

/// A model the lifecycle can fit with minibatch Adam on squared error.
pub trait Trainable: Predictor {
    type Grad;
    type Optimizer;

    fn optimizer(&self, config: AdamConfig) -> Self::Optimizer;
    fn zero_grad(&self) -> Self::Grad;
    fn clear_grad(grad: &mut Self::Grad);
    /// Adds `scale * d(y_hat - target)^2 / d(theta)` into `grad`.
    fn accumulate_grad(
        &self,
        features: &[f64],
        target: f64,
        scale: f64,
        grad: &mut Self::Grad,
    ) -> Result<()>;
    fn apply_grad(&mut self, grad: &Self::Grad, opt: &mut Self::Optimizer) -> Result<()>;
}

impl Predictor for PhysicsModel {
    fn predict_value(&self, features: &[f64]) -> Result<f64> {
        self.predict(features)
    }
}

impl Predictor for PhysiNetModel {
    fn predict_value(&self, features: &[f64]) -> Result<f64> {
        self.predict(features).map(|p| p.y_hat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysiNetGrad {
    pub net: Gradients,
    pub combiner: [f64; 2],
}

/// Network and combiner weights get separate Adam slots with the same
/// hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysiNetOptimizer {
    pub net: AdamState,
    pub combiner: AdamState,
}

impl Trainable for PhysiNetModel {
    type Grad = PhysiNetGrad;
    type Optimizer = PhysiNetOptimizer;

    fn optimizer(&self, config: AdamConfig) -> PhysiNetOptimizer {
        PhysiNetOptimizer {
            net: AdamState::new(config, &self.net),
            combiner: AdamState::new(config, &self.weights.as_array()),
        }
    }

    fn zero_grad(&self) -> PhysiNetGrad {
        PhysiNetGrad {
            net: Gradients::zeros_like(&self.net),
            combiner: [0.0; 2],
        }
    }

    fn clear_grad(grad: &mut PhysiNetGrad) {
        grad.net.fill(0.0);
        grad.combiner = [0.0; 2];
    }

    fn accumulate_grad(
        &self,
        features: &[f64],
        target: f64,
        scale: f64,
        grad: &mut PhysiNetGrad,
    ) -> Result<()> {
        let (p, scaled, acts) = self.forward(features)?;
        let upstream = scale * 2.0 * (p.y_hat - target);
        let cg = combiner_gradients(p.q_physi, p.q_nn, &self.weights, upstream);
        grad.combiner[0] += cg.d_w_physi;
        grad.combiner[1] += cg.d_w_nn;
        self.net
            .backward_into(&scaled, &acts, cg.d_q_nn, &mut grad.net)
    }

    fn apply_grad(&mut self, grad: &PhysiNetGrad, opt: &mut PhysiNetOptimizer) -> Result<()> {
        opt.net.step(&mut self.net, &grad.net)?;
        if !self.freeze_combiner {
            let mut w = self.weights.as_array();
            opt.combiner.step(&mut w, &grad.combiner)?;
            self.weights = CombinerWeights::from_array(w);
        }
        Ok(())
    }
}

/// Data-only baseline: a network on standardized inputs, no physics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnOnlyModel {
    pub net: Network,
    /// `None` until fitted.
    pub scaler: Option<InputScaler>,
}

impl NnOnlyModel {
    pub fn new(net: Network) -> Self {
        Self { net, scaler: None }
    }
}

impl Predictor for NnOnlyModel {
    fn predict_value(&self, features: &[f64]) -> Result<f64> {
        self.net
            .predict(&scale_features(self.scaler.as_ref(), features)?)
    }
}

impl Trainable for NnOnlyModel {
    type Grad = Gradients;
    type Optimizer = AdamState;

    fn optimizer(&self, config: AdamConfig) -> AdamState {
        AdamState::new(config, &self.net)
    }

    fn zero_grad(&self) -> Gradients {
        Gradients::zeros_like(&self.net)
    }

    fn clear_grad(grad: &mut Gradients) {
        grad.fill(0.0);
    }

    fn accumulate_grad(
        &self,
        features: &[f64],
        target: f64,
        scale: f64,
        grad: &mut Gradients,
    ) -> Result<()> {
        let scaled = scale_features(self.scaler.as_ref(), features)?;
        let (q, acts) = self.net.forward(&scaled)?;
        self.net
            .backward_into(&scaled, &acts, scale * 2.0 * (q - target), grad)
    }

    fn apply_grad(&mut self, grad: &Gradients, opt: &mut AdamState) -> Result<()> {
        opt.step(&mut self.net, grad)
    }
}

/// A trainable model with its optimizer state and minibatch shuffler; all
/// three persist across lifecycle steps.
#[derive(Debug, Clone)]
pub struct Learner<M: Trainable> {
    pub model: M,
    pub optimizer: M::Optimizer,
    shuffler: Rng,
}

impl<M: Trainable> Learner<M> {
    pub fn new(model: M, adam: AdamConfig, shuffle_seed: u64) -> Self {
        let optimizer = model.optimizer(adam);
        Self {
            model,
            optimizer,
            shuffler: Rng::new(shuffle_seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub steps: usize,
    pub points_per_step: usize,
    pub epochs_per_step: usize,
    pub minibatch_size: usize,
    pub test_set_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Network branch of the hybrid.
    pub physinet_layers: Vec<usize>,
    /// Data-only baseline.
    pub nn_only_layers: Vec<usize>,
    /// Points in each prediction snapshot grid.
    pub snapshot_points: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            points_per_step: 80,
            epochs_per_step: 40,
            minibatch_size: 16,
            test_set_size: 2000,
            learning_rate: 0.002,
            seed: 0,
            physinet_layers: vec![1, 10, 10, 1],
            nn_only_layers: vec![1, 4, 1],
            snapshot_points: 101,
        }
    }
}

impl TrainerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("steps", self.steps),
            ("points_per_step", self.points_per_step),
            ("minibatch_size", self.minibatch_size),
            ("test_set_size", self.test_set_size),
            ("snapshot_points", self.snapshot_points),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.minibatch_size > self.points_per_step {
            return Err(Error::Config(format!(
                "minibatch_size {} exceeds points_per_step {}",
                self.minibatch_size, self.points_per_step
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive; got {}",
                self.learning_rate
            )));
        }
        NetworkConfig::new(self.physinet_layers.clone(), 0).validate()?;
        NetworkConfig::new(self.nn_only_layers.clone(), 0).validate()?;
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_learning_rate(self.learning_rate)
    }
}

/// Mean of squared differences.
pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::Usage(format!(
            "mse needs equal lengths; got {} predictions and {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Usage("mse of an empty list".into()));
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Test-set MSE of any predictor.
pub fn evaluate<P: Predictor + ?Sized>(model: &P, batch: &DataBatch) -> Result<f64> {
    let predictions = batch
        .inputs()
        .iter()
        .map(|x| model.predict_value(x))
        .collect::<Result<Vec<_>>>()?;
    mse(&predictions, batch.targets())
}

/// `epochs_per_step` shuffled passes over `batch`, one Adam update per
/// minibatch on the minibatch's mean squared error.
pub fn train_one_step<M: Trainable>(
    learner: &mut Learner<M>,
    batch: &DataBatch,
    config: &TrainerConfig,
) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Usage("cannot train on an empty batch".into()));
    }
    if config.minibatch_size == 0 {
        return Err(Error::Config("minibatch_size must be positive".into()));
    }
    let mut grad = learner.model.zero_grad();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    for _ in 0..config.epochs_per_step {
        learner.shuffler.shuffle(&mut order);
        for chunk in order.chunks(config.minibatch_size) {
            M::clear_grad(&mut grad);
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                learner.model.accumulate_grad(
                    &batch.inputs()[i],
                    batch.targets()[i],
                    scale,
                    &mut grad,
                )?;
            }
            learner.model.apply_grad(&grad, &mut learner.optimizer)?;
        }
    }
    Ok(())
}

/// One of the two case studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum Scenario {
    /// Noisy quadratic measured against a linear physics law.
    Case1(Case1Config),
    /// Second-order plant FRF measured against a mis-tuned model.
    Case2(Case2Config),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Case1(_) => "case1",
            Scenario::Case2(_) => "case2",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::Case1(c) => c.validate(),
            Scenario::Case2(c) => c.validate(),
        }
    }

    pub fn physics(&self) -> Result<PhysicsModel> {
        Ok(match self {
            Scenario::Case1(c) => c.physics()?.into(),
            Scenario::Case2(c) => c.physics()?.into(),
        })
    }

    pub fn sample(&self, n: usize, rng: &mut Rng) -> Result<DataBatch> {
        match self {
            Scenario::Case1(c) => sample_case1(c, n, rng),
            Scenario::Case2(c) => sample_case2(c, n, rng),
        }
    }

    /// Input interval the measurements are drawn from.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Scenario::Case1(c) => (c.x_low, c.x_high),
            Scenario::Case2(c) => (c.omega_low, c.omega_high),
        }
    }

    /// Steps at which prediction snapshots are taken.
    pub fn snapshot_steps(&self) -> &'static [usize] {
        match self {
            Scenario::Case1(_) => &[0, 9, 19, 29, 39, 49],
            Scenario::Case2(_) => &[0, 9, 19, 29],
        }
    }

    /// CSV header used when exporting raw measurements.
    pub fn csv_header(&self) -> &'static str {
        match self {
            Scenario::Case1(_) => "x,y",
            Scenario::Case2(_) => "omega,magnitude",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Physinet,
    NnOnly,
    PhysicsOnly,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Physinet, Variant::NnOnly, Variant::PhysicsOnly];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Physinet => "physinet",
            Variant::NnOnly => "nn_only",
            Variant::PhysicsOnly => "physics_only",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown variant {s:?}")))
    }
}

/// Post-training scores for one lifecycle step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub mse_physinet: f64,
    pub mse_nn_only: f64,
    pub mse_physics_only: f64,
    pub w_physi: f64,
    pub w_nn: f64,
    /// `None` when `w_nn` is exactly zero.
    pub weight_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSnapshot {
    pub step: usize,
    pub variant: Variant,
    /// `(input, y_hat)` with strictly increasing inputs.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct LifecycleReport {
    pub scenario: Scenario,
    pub config: TrainerConfig,
    pub initial_weights: CombinerWeights,
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<PredictionSnapshot>,
    pub physinet: PhysiNetModel,
    pub nn_only: NnOnlyModel,
    pub test_set: DataBatch,
}

impl LifecycleReport {
    pub fn record(&self, step: usize) -> Option<&StepRecord> {
        self.records.iter().find(|r| r.step == step)
    }
}

// Independent random streams under one master seed.
const STREAM_TEST: u64 = 0;
const STREAM_TRAIN: u64 = 1;
const STREAM_PHYSINET_INIT: u64 = 2;
const STREAM_NN_INIT: u64 = 3;
const STREAM_PHYSINET_SHUFFLE: u64 = 4;
const STREAM_NN_SHUFFLE: u64 = 5;

/// The two trainable variants as the default lifecycle builds them.
pub fn build_models(
    scenario: &Scenario,
    config: &TrainerConfig,
) -> Result<(PhysiNetModel, NnOnlyModel)> {
    config.validate()?;
    let init_seed = |stream| Rng::derive(config.seed, stream).next_u64();
    let physinet_net = Network::init(&NetworkConfig::new(
        config.physinet_layers.clone(),
        init_seed(STREAM_PHYSINET_INIT),
    ))?;
    let nn_net = Network::init(&NetworkConfig::new(
        config.nn_only_layers.clone(),
        init_seed(STREAM_NN_INIT),
    ))?;
    let physinet = PhysiNetModel::new(
        scenario.physics()?,
        physinet_net,
        CombinerWeights::default(),
    )?;
    Ok((physinet, NnOnlyModel::new(nn_net)))
}

pub fn run_lifecycle(scenario: &Scenario, config: &TrainerConfig) -> Result<LifecycleReport> {
    let (physinet, nn_only) = build_models(scenario, config)?;
    run_lifecycle_with(scenario, config, physinet, nn_only)
}

/// Lifecycle with caller-supplied starting models. A model without an input
/// scaler gets one fitted to the first training batch; a model that already
/// has one (for example, restored from a snapshot) keeps it.
pub fn run_lifecycle_with(
    scenario: &Scenario,
    config: &TrainerConfig,
    mut physinet: PhysiNetModel,
    mut nn_only: NnOnlyModel,
) -> Result<LifecycleReport> {
    config.validate()?;
    scenario.validate()?;
    let physics = *physinet.physics();
    let initial_weights = physinet.weights;

    let test_set = scenario.sample(
        config.test_set_size,
        &mut Rng::derive(config.seed, STREAM_TEST),
    )?;
    let mut train_rng = Rng::derive(config.seed, STREAM_TRAIN);
    let shuffle_seed = |stream| Rng::derive(config.seed, stream).next_u64();

    let grid = snapshot_grid(scenario.domain(), config.snapshot_points);
    let mse_physics_only = evaluate(&physics, &test_set)?;

    let mut records = Vec::with_capacity(config.steps);
    let mut snapshots = Vec::new();
    let mut learners: Option<(Learner<PhysiNetModel>, Learner<NnOnlyModel>)> = None;

    for step in 0..config.steps {
        let at_step = |e: Error| Error::Step {
            step,
            source: Box::new(e),
        };
        let batch = scenario
            .sample(config.points_per_step, &mut train_rng)
            .map_err(at_step)?;

        let (hybrid, baseline) = learners.get_or_insert_with(|| {
            let scaler = InputScaler::fit(&batch);
            physinet.scaler.get_or_insert_with(|| scaler.clone());
            nn_only.scaler.get_or_insert(scaler);
            (
                Learner::new(
                    physinet.clone(),
                    config.adam(),
                    shuffle_seed(STREAM_PHYSINET_SHUFFLE),
                ),
                Learner::new(
                    nn_only.clone(),
                    config.adam(),
                    shuffle_seed(STREAM_NN_SHUFFLE),
                ),
            )
        });

        train_one_step(hybrid, &batch, config).map_err(at_step)?;
        train_one_step(baseline, &batch, config).map_err(at_step)?;
        if !hybrid.model.net.is_finite() || !baseline.model.net.is_finite() {
            return Err(at_step(Error::NonFinite(
                "network parameters diverged".into(),
            )));
        }

        let weights = hybrid.model.weights;
        records.push(StepRecord {
            step,
            mse_physinet: evaluate(&hybrid.model, &test_set).map_err(at_step)?,
            mse_nn_only: evaluate(&baseline.model, &test_set).map_err(at_step)?,
            mse_physics_only,
            w_physi: weights.w_physi,
            w_nn: weights.w_nn,
            weight_ratio: weight_ratio(&weights),
        });

        if scenario.snapshot_steps().contains(&step) {
            let variants: [(Variant, &dyn Predictor); 3] = [
                (Variant::Physinet, &hybrid.model),
                (Variant::NnOnly, &baseline.model),
                (Variant::PhysicsOnly, &physics),
            ];
            for (variant, model) in variants {
                let points = grid
                    .iter()
                    .map(|&x| model.predict_value(&[x]).map(|y| (x, y)))
                    .collect::<Result<Vec<_>>>()
                    .map_err(at_step)?;
                snapshots.push(PredictionSnapshot {
                    step,
                    variant,
                    points,
                });
            }
        }
    }

    let (hybrid, baseline) = learners.expect("steps >= 1 is enforced by TrainerConfig::validate");
    Ok(LifecycleReport {
        scenario: *scenario,
        config: config.clone(),
        initial_weights,
        records,
        snapshots,
        physinet: hybrid.model,
        nn_only: baseline.model,
        test_set,
    })
}

/// `n` evenly spaced points covering `[lo, hi]`.
fn snapshot_grid((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
