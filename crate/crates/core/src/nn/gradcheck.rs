//! Forward/backward consistency suite against central finite differences.

use std::fmt;

use super::{finite_diff_grad, relative_error, Network, NetworkConfig};
use crate::error::Result;
use crate::rng::Rng;

pub const TOLERANCE: f64 = 1e-5;
/// Step balancing truncation against rounding for losses of order one.
pub const FD_EPSILON: f64 = 2e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    pub seed: u64,
    pub cases_per_architecture: usize,
    pub architectures: Vec<Vec<usize>>,
    /// Negative-control hook: added to the first analytic gradient entry of
    /// the first case.
    pub corrupt: Option<f64>,
}

impl GradCheckOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            cases_per_architecture: 50,
            architectures: vec![vec![1, 10, 10, 1], vec![1, 4, 1]],
            corrupt: None,
        }
    }
}

/// Where the worst disagreement was found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamCoord {
    pub architecture: usize,
    pub case: usize,
    pub layer: usize,
    pub is_bias: bool,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl fmt::Display for ParamCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "architecture {} case {} layer {} {}[{}] (analytic {:e}, numeric {:e})",
            self.architecture,
            self.case,
            self.layer,
            if self.is_bias { "bias" } else { "weight" },
            self.index,
            self.analytic,
            self.numeric
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst: Option<ParamCoord>,
    pub cases: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < TOLERANCE
    }
}

/// Squared-error loss on random (net, input, target) triples; compares the
/// analytic gradient with the finite-difference one parameter by parameter.
pub fn run(opts: &GradCheckOptions) -> Result<GradCheckReport> {
    let mut rng = Rng::new(opts.seed);
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        cases: 0,
    };
    for (a, sizes) in opts.architectures.iter().enumerate() {
        for case in 0..opts.cases_per_architecture {
            let mut net = Network::init(&NetworkConfig::new(sizes.clone(), rng.next_u64()))?;
            // Freshly initialized biases are all zero, which would leave the
            // bias terms of the forward pass unexercised.
            for layer in net.layers_mut() {
                for b in layer.biases_mut() {
                    *b = rng.uniform(-0.5, 0.5);
                }
            }
            let x: Vec<f64> = (0..sizes[0]).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let (q, acts) = net.forward(&x)?;
            // Residual magnitude in [0.5, 2]: as the residual vanishes the
            // true gradient vanishes with it but the central-difference
            // truncation error does not, which would test the oracle rather
            // than the backward pass.
            let offset = rng.uniform(0.5, 2.0);
            let target = if rng.next_u64() & 1 == 0 {
                q + offset
            } else {
                q - offset
            };

            let mut analytic = net.backward(&x, &acts, 2.0 * (q - target))?;
            if let Some(delta) = opts.corrupt {
                if a == 0 && case == 0 {
                    analytic.layers_mut()[0].weights_mut()[0] += delta;
                }
            }
            let numeric = finite_diff_grad(
                &net,
                |n| n.predict(&x).map_or(f64::NAN, |q| (q - target).powi(2)),
                FD_EPSILON,
            );

            for (layer, (ga, gn)) in analytic.layers().iter().zip(numeric.layers()).enumerate() {
                let pairs = ga
                    .weights()
                    .iter()
                    .zip(gn.weights())
                    .map(|p| (false, p))
                    .chain(ga.biases().iter().zip(gn.biases()).map(|p| (true, p)));
                let mut w_idx = 0;
                let mut b_idx = 0;
                for (is_bias, (&an, &nu)) in pairs {
                    let index = if is_bias { &mut b_idx } else { &mut w_idx };
                    let err = relative_error(an, nu);
                    if err > report.max_relative_error || err.is_nan() {
                        report.max_relative_error = if err.is_nan() { f64::INFINITY } else { err };
                        report.worst = Some(ParamCoord {
                            architecture: a,
                            case,
                            layer,
                            is_bias,
                            index: *index,
                            analytic: an,
                            numeric: nu,
                        });
                    }
                    *index += 1;
                }
            }
            report.cases += 1;
        }
    }
    Ok(report)
}
