use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::error::{check_len, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

/// Adam moments for one parameter set, with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    timestep: u64,
}

impl AdamState {
    /// Fresh state with zeroed moments shaped like `params`.
    pub fn new<P: Parameters + ?Sized>(config: AdamConfig, params: &P) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .buffers()
            .iter()
            .map(|b| vec![0.0; b.len()])
            .collect();
        Self {
            config,
            first_moment: zeros.clone(),
            second_moment: zeros,
            timestep: 0,
        }
    }

    pub fn timestep(&self) -> u64 {
        self.timestep
    }

    pub fn step<P, G>(&mut self, params: &mut P, grads: &G) -> Result<()>
    where
        P: Parameters + ?Sized,
        G: Parameters + ?Sized,
    {
        let mut param_bufs = params.buffers_mut();
        let grad_bufs = grads.buffers();
        check_len(
            "adam parameter buffers",
            self.first_moment.len(),
            param_bufs.len(),
        )?;
        check_len(
            "adam gradient buffers",
            self.first_moment.len(),
            grad_bufs.len(),
        )?;
        for ((p, g), m) in param_bufs.iter().zip(&grad_bufs).zip(&self.first_moment) {
            check_len("adam buffer length", m.len(), p.len())?;
            check_len("adam gradient length", m.len(), g.len())?;
        }

        self.timestep += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = i32::try_from(self.timestep).unwrap_or(i32::MAX);
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);

        for (((p, g), m), v) in param_bufs
            .iter_mut()
            .zip(&grad_bufs)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                p[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
