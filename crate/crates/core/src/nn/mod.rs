//! Dense feedforward network with hand-written reverse-mode gradients.
//!
//! Hidden layers compute `tanh(W p + b)`, the output layer computes the
//! identity-activated `W p + b`, and the network value `q_nn` is the sum of
//! the output neurons. All networks built here have a single output neuron,
//! so the sum is a pass-through.
//!
//! Weights are stored row-major with shape `(neurons, inputs)`.

mod adam;
pub mod gradcheck;

pub use adam::{AdamConfig, AdamState};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's own output.
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

/// Weights and biases of one dense layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayerRepr", into = "LayerRepr")]
pub struct LayerParams {
    inputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

/// Serialized form: weights as one nested array per neuron.
#[derive(Serialize, Deserialize)]
struct LayerRepr {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

impl From<LayerParams> for LayerRepr {
    fn from(layer: LayerParams) -> Self {
        let weights = layer
            .weights
            .chunks(layer.inputs)
            .map(<[f64]>::to_vec)
            .collect();
        LayerRepr {
            weights,
            biases: layer.biases,
        }
    }
}

impl TryFrom<LayerRepr> for LayerParams {
    type Error = Error;

    fn try_from(repr: LayerRepr) -> Result<Self> {
        let rows: Vec<Vec<f64>> = repr.weights;
        let inputs = rows.first().map_or(0, Vec::len);
        let mut weights = Vec::with_capacity(rows.len() * inputs);
        for row in rows {
            check_len("weight row length", inputs, row.len())?;
            weights.extend(row);
        }
        LayerParams::from_parts(inputs, weights, repr.biases)
    }
}

impl LayerParams {
    pub fn zeros(neurons: usize, inputs: usize) -> Self {
        Self {
            inputs,
            weights: vec![0.0; neurons * inputs],
            biases: vec![0.0; neurons],
        }
    }

    /// Builds a layer from a row-major weight buffer.
    pub fn from_parts(inputs: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if inputs == 0 || biases.is_empty() {
            return Err(Error::Config("layer dimensions must be positive".into()));
        }
        check_len("layer weight count", biases.len() * inputs, weights.len())?;
        if let Some(bad) = weights.iter().chain(&biases).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("layer parameter {bad}")));
        }
        Ok(Self {
            inputs,
            weights,
            biases,
        })
    }

    pub fn neurons(&self) -> usize {
        self.biases.len()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    #[inline]
    pub fn weight(&self, neuron: usize, input: usize) -> f64 {
        self.weights[neuron * self.inputs + input]
    }

    fn same_shape(&self, other: &LayerParams) -> bool {
        self.inputs == other.inputs && self.biases.len() == other.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// `[n_in, h_1, ..., h_k, n_out]`.
    pub layer_sizes: Vec<usize>,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn new(layer_sizes: impl Into<Vec<usize>>, seed: u64) -> Self {
        Self {
            layer_sizes: layer_sizes.into(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = &self.layer_sizes;
        if sizes.len() < 3 {
            return Err(Error::Config(format!(
                "need input, at least one hidden layer and output; got layer sizes {sizes:?}"
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::Config(format!(
                "layer sizes must be positive; got {sizes:?}"
            )));
        }
        if sizes[sizes.len() - 1] != 1 {
            return Err(Error::Config(format!(
                "output layer must have exactly one neuron; got {sizes:?}"
            )));
        }
        Ok(())
    }
}

/// Per-layer outputs from [`Network::forward`], kept for [`Network::backward`].
///
/// `values[0]` is the input vector and `values[l + 1]` the output of layer `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    values: Vec<Vec<f64>>,
}

impl Activations {
    pub fn input(&self) -> &[f64] {
        &self.values[0]
    }

    pub fn layer_output(&self, layer: usize) -> &[f64] {
        &self.values[layer + 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<LayerParams>,
}

impl Network {
    /// Glorot-uniform weights, zero biases, fully determined by `config.seed`.
    pub fn init(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::new(config.seed);
        let layers = config
            .layer_sizes
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = (0..fan_in * fan_out)
                    .map(|_| rng.uniform(-limit, limit))
                    .collect();
                LayerParams {
                    inputs: fan_in,
                    weights,
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        NetworkConfig::new(layer_sizes, 0).validate()?;
        let layers = layer_sizes
            .windows(2)
            .map(|pair| LayerParams::zeros(pair[1], pair[0]))
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<LayerParams>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::Config(
                "network needs at least one hidden layer".into(),
            ));
        }
        for pair in layers.windows(2) {
            check_len("chained layer inputs", pair[0].neurons(), pair[1].inputs())?;
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_size())
            .chain(self.layers.iter().map(LayerParams::neurons))
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            Activation::Identity
        } else {
            Activation::Tanh
        }
    }

    pub fn forward(&self, features: &[f64]) -> Result<(f64, Activations)> {
        check_len("network input", self.input_size(), features.len())?;
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        values.push(features.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let act = self.activation(l);
            let input = &values[l];
            let out: Vec<f64> = layer
                .weights
                .chunks_exact(layer.inputs)
                .zip(&layer.biases)
                .map(|(row, b)| {
                    let z = row.iter().zip(input).map(|(w, p)| w * p).sum::<f64>() + b;
                    act.apply(z)
                })
                .collect();
            values.push(out);
        }
        let q_nn = values[values.len() - 1].iter().sum();
        Ok((q_nn, Activations { values }))
    }

    /// Network value only.
    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        self.forward(features).map(|(q, _)| q)
    }

    /// Gradients of a loss whose derivative w.r.t. `q_nn` is `upstream`.
    pub fn backward(
        &self,
        features: &[f64],
        activations: &Activations,
        upstream: f64,
    ) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_into(features, activations, upstream, &mut grads)?;
        Ok(grads)
    }

    /// Like [`backward`](Self::backward) but adds into an existing buffer.
    pub fn backward_into(
        &self,
        features: &[f64],
        activations: &Activations,
        upstream: f64,
        grads: &mut Gradients,
    ) -> Result<()> {
        check_len(
            "activation layer count",
            self.layers.len() + 1,
            activations.values.len(),
        )?;
        check_len("backward features", self.input_size(), features.len())?;
        check_len(
            "backward activations input",
            features.len(),
            activations.input().len(),
        )?;
        check_len(
            "gradient layer count",
            self.layers.len(),
            grads.layers.len(),
        )?;
        for (layer, (g, a)) in self
            .layers
            .iter()
            .zip(grads.layers.iter().zip(&activations.values[1..]))
        {
            if !layer.same_shape(g) {
                return Err(Error::Shape {
                    context: "gradient buffer",
                    expected: layer.weights.len(),
                    actual: g.weights.len(),
                });
            }
            check_len("activation width", layer.neurons(), a.len())?;
        }

        // dq/da for every output neuron is 1 (q_nn is their sum).
        let last = self.layers.len() - 1;
        let mut delta_out: Vec<f64> = vec![upstream; self.layers[last].neurons()];
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let act = self.activation(l);
            let out = &activations.values[l + 1];
            let input = &activations.values[l];
            let delta_z: Vec<f64> = delta_out
                .iter()
                .zip(out)
                .map(|(d, a)| d * act.derivative_from_output(*a))
                .collect();

            let g = &mut grads.layers[l];
            for (n, dz) in delta_z.iter().enumerate() {
                g.biases[n] += dz;
                let row = &mut g.weights[n * layer.inputs..(n + 1) * layer.inputs];
                for (gw, p) in row.iter_mut().zip(input) {
                    *gw += dz * p;
                }
            }

            if l > 0 {
                delta_out = (0..layer.inputs)
                    .map(|i| {
                        delta_z
                            .iter()
                            .enumerate()
                            .map(|(n, dz)| dz * layer.weight(n, i))
                            .sum()
                    })
                    .collect();
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }
}

/// Loss derivatives, shape-congruent with the [`Network`] they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layers: Vec<LayerParams>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerParams::zeros(l.neurons(), l.inputs()))
                .collect(),
        }
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    pub fn is_congruent_with(&self, net: &Network) -> bool {
        self.layers.len() == net.layers.len()
            && self
                .layers
                .iter()
                .zip(&net.layers)
                .all(|(g, l)| g.same_shape(l))
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.values_mut() {
            *v *= factor;
        }
    }

    pub fn fill(&mut self, value: f64) {
        for v in self.values_mut() {
            *v = value;
        }
    }

    /// All entries, layer by layer, weights before biases.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }
}

/// Anything Adam can update: an ordered list of flat parameter buffers.
pub trait Parameters {
    fn buffers(&self) -> Vec<&[f64]>;
    fn buffers_mut(&mut self) -> Vec<&mut [f64]>;
}

impl Parameters for Network {
    fn buffers(&self) -> Vec<&[f64]> {
        layer_buffers(&self.layers)
    }
    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        layer_buffers_mut(&mut self.layers)
    }
}

impl Parameters for Gradients {
    fn buffers(&self) -> Vec<&[f64]> {
        layer_buffers(&self.layers)
    }
    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        layer_buffers_mut(&mut self.layers)
    }
}

impl<const N: usize> Parameters for [f64; N] {
    fn buffers(&self) -> Vec<&[f64]> {
        vec![self.as_slice()]
    }
    fn buffers_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.as_mut_slice()]
    }
}

fn layer_buffers(layers: &[LayerParams]) -> Vec<&[f64]> {
    layers
        .iter()
        .flat_map(|l| [l.weights.as_slice(), l.biases.as_slice()])
        .collect()
}

fn layer_buffers_mut(layers: &mut [LayerParams]) -> Vec<&mut [f64]> {
    layers
        .iter_mut()
        .flat_map(|l| [l.weights.as_mut_slice(), l.biases.as_mut_slice()])
        .collect()
}

/// Central-difference estimate of `d loss / d theta` for every parameter.
pub fn finite_diff_grad<F>(net: &Network, loss_fn: F, eps: f64) -> Gradients
where
    F: Fn(&Network) -> f64,
{
    let mut grads = Gradients::zeros_like(net);
    let mut probe = net.clone();
    for l in 0..net.layers.len() {
        for i in 0..net.layers[l].weights.len() {
            let orig = net.layers[l].weights[i];
            probe.layers[l].weights[i] = orig + eps;
            let plus = loss_fn(&probe);
            probe.layers[l].weights[i] = orig - eps;
            let minus = loss_fn(&probe);
            probe.layers[l].weights[i] = orig;
            grads.layers[l].weights[i] = (plus - minus) / (2.0 * eps);
        }
        for i in 0..net.layers[l].biases.len() {
            let orig = net.layers[l].biases[i];
            probe.layers[l].biases[i] = orig + eps;
            let plus = loss_fn(&probe);
            probe.layers[l].biases[i] = orig - eps;
            let minus = loss_fn(&probe);
            probe.layers[l].biases[i] = orig;
            grads.layers[l].biases[i] = (plus - minus) / (2.0 * eps);
        }
    }
    grads
}

/// Symmetric relative error used by the gradient checks.
#[inline]
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs() + 1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_one_one(w_hidden: f64, b_hidden: f64, w_out: f64, b_out: f64) -> Network {
        Network::from_layers(vec![
            LayerParams::from_parts(1, vec![w_hidden], vec![b_hidden]).unwrap(),
            LayerParams::from_parts(1, vec![w_out], vec![b_out]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = NetworkConfig::new([1, 4, 1], 7);
        let a = Network::init(&cfg).unwrap();
        let b = Network::init(&cfg).unwrap();
        assert_eq!(a, b);
        let other = Network::init(&NetworkConfig::new([1, 4, 1], 8)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn init_zero_biases_and_glorot_bounds() {
        for seed in 0..20 {
            let net = Network::init(&NetworkConfig::new([1, 10, 10, 1], seed)).unwrap();
            let bounds = [
                (6.0f64 / 11.0).sqrt(),
                (6.0f64 / 20.0).sqrt(),
                (6.0f64 / 11.0).sqrt(),
            ];
            for (layer, bound) in net.layers().iter().zip(bounds) {
                assert!(layer.biases().iter().all(|&b| b == 0.0));
                assert!(layer.weights().iter().all(|w| w.abs() <= bound));
            }
        }
        // first-layer bound sqrt(6/11)
        assert!(((6.0f64 / 11.0).sqrt() - 0.7385489458759964).abs() < 1e-15);
    }

    #[test]
    fn init_rejects_bad_configs() {
        for sizes in [
            vec![],
            vec![1, 1],
            vec![1, 0, 1],
            vec![0, 4, 1],
            vec![1, 4, 2],
        ] {
            assert!(matches!(
                Network::init(&NetworkConfig::new(sizes, 1)),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Network::zeros(&[1, 10, 10, 1]).unwrap();
        for x in [-5.0, 0.0, 3.0, 1e6] {
            assert_eq!(net.predict(&[x]).unwrap(), 0.0);
        }
    }

    #[test]
    fn hand_evaluated_forward() {
        let net = one_one_one(1.0, 0.0, 1.0, 0.0);
        let q = net.predict(&[1.0]).unwrap();
        assert!((q - 0.7615941559557649).abs() < 1e-15);

        let net = one_one_one(0.0, 0.0, 5.0, 2.5);
        for x in [-3.0, 0.0, 42.0] {
            assert_eq!(net.predict(&[x]).unwrap(), 2.5);
        }
    }

    #[test]
    fn forward_rejects_wrong_input_width() {
        let net = Network::zeros(&[2, 3, 1]).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn hand_evaluated_backward() {
        let net = one_one_one(1.0, 0.0, 1.0, 0.0);
        let (_, acts) = net.forward(&[1.0]).unwrap();
        let g = net.backward(&[1.0], &acts, 1.0).unwrap();
        let t = 1.0f64.tanh();
        assert!((g.layers()[1].weights()[0] - t).abs() < 1e-15);
        assert!((g.layers()[1].biases()[0] - 1.0).abs() < 1e-15);
        assert!((g.layers()[0].weights()[0] - 0.41997434161402614).abs() < 1e-12);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = Network::init(&NetworkConfig::new([1, 10, 10, 1], 3)).unwrap();
        let (_, acts) = net.forward(&[0.7]).unwrap();
        let g = net.backward(&[0.7], &acts, 0.0).unwrap();
        assert!(g.values().all(|v| v == 0.0));
    }

    #[test]
    fn backward_shape_closure() {
        for sizes in [[1usize, 4, 1].as_slice(), &[1, 10, 10, 1]] {
            let net = Network::init(&NetworkConfig::new(sizes, 11)).unwrap();
            let (_, acts) = net.forward(&[0.3]).unwrap();
            let g = net.backward(&[0.3], &acts, 1.0).unwrap();
            assert!(g.is_congruent_with(&net));
        }
    }

    #[test]
    fn backward_rejects_mismatched_activations() {
        let small = Network::zeros(&[1, 4, 1]).unwrap();
        let big = Network::zeros(&[1, 10, 10, 1]).unwrap();
        let (_, acts) = big.forward(&[1.0]).unwrap();
        assert!(matches!(
            small.backward(&[1.0], &acts, 1.0),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn finite_diff_of_constant_is_zero() {
        let net = Network::init(&NetworkConfig::new([1, 4, 1], 1)).unwrap();
        let g = finite_diff_grad(&net, |_| 3.25, 1e-6);
        assert!(g.values().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn finite_diff_of_square() {
        let net = one_one_one(3.0, 0.0, 0.0, 0.0);
        let g = finite_diff_grad(&net, |n| n.layers()[0].weights()[0].powi(2), 1e-6);
        assert!((g.layers()[0].weights()[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let net = Network::init(&NetworkConfig::new([1, 10, 10, 1], 5)).unwrap();
        let (x, target) = (0.37, 1.3);
        let loss = |n: &Network| (n.predict(&[x]).unwrap() - target).powi(2);
        let (q, acts) = net.forward(&[x]).unwrap();
        let analytic = net.backward(&[x], &acts, 2.0 * (q - target)).unwrap();
        let numeric = finite_diff_grad(&net, loss, 1e-6);
        let worst = analytic
            .values()
            .zip(numeric.values())
            .map(|(a, n)| relative_error(a, n))
            .fold(0.0, f64::max);
        assert!(worst < 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn layer_json_uses_nested_rows() {
        let layer =
            LayerParams::from_parts(2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![0.0; 3]).unwrap();
        let json = serde_json::to_value(&layer).unwrap();
        assert_eq!(
            json["weights"],
            serde_json::json!([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        );
        let back: LayerParams = serde_json::from_value(json).unwrap();
        assert_eq!(back, layer);
    }

    #[test]
    fn layer_rejects_non_finite() {
        assert!(matches!(
            LayerParams::from_parts(1, vec![f64::NAN], vec![0.0]),
            Err(Error::NonFinite(_))
        ));
    }
}
