//! Seeded synthetic measurement processes.
//!
//! Each generated point consumes exactly two 64-bit draws from the caller's
//! [`Rng`]: the input first, then the noise variate. The noise draw is taken
//! even when the noise standard deviation is zero so that streams stay
//! aligned across configurations.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::physics::{LinearPhysics, SecondOrderFrf};
use crate::rng::Rng;

/// Paired inputs and measurements for one lifecycle step (or a test set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataBatch {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl DataBatch {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        check_len("batch targets", inputs.len(), targets.len())?;
        if inputs.is_empty() {
            return Err(Error::Usage("data batch must not be empty".into()));
        }
        let width = inputs[0].len();
        for row in &inputs {
            check_len("batch feature width", width, row.len())?;
        }
        if let Some(v) = inputs
            .iter()
            .flatten()
            .chain(&targets)
            .find(|v| !v.is_finite())
        {
            return Err(Error::NonFinite(format!("batch value {v}")));
        }
        Ok(Self { inputs, targets })
    }

    /// Single-feature batch.
    pub fn from_scalars(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Self::new(xs.into_iter().map(|x| vec![x]).collect(), ys)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.inputs
            .iter()
            .map(Vec::as_slice)
            .zip(self.targets.iter().copied())
    }

    /// Writes `header` then one `input,target` row per point, 17 significant
    /// digits per value. Only single-feature batches are supported.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &str) -> io::Result<()> {
        writeln!(out, "{header}")?;
        for (x, y) in self.iter() {
            writeln!(out, "{:.16e},{:.16e}", x[0], y)?;
        }
        Ok(())
    }
}

/// `y = a x^2 + b + noise`, with `x ~ U[x_low, x_high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Case1Config {
    pub a: f64,
    pub b: f64,
    pub noise_std: f64,
    pub x_low: f64,
    pub x_high: f64,
    /// Slope and offset of the linear physics law the hybrid starts from.
    pub physics_c: f64,
    pub physics_d: f64,
}

impl Default for Case1Config {
    fn default() -> Self {
        Self {
            a: 0.1,
            b: 15.0,
            noise_std: 0.5,
            x_low: 0.0,
            x_high: 10.0,
            physics_c: 1.0,
            physics_d: 10.0,
        }
    }
}

impl Case1Config {
    pub fn validate(&self) -> Result<()> {
        let all = [self.a, self.b, self.noise_std, self.x_low, self.x_high];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("case1 parameters must be finite".into()));
        }
        if self.x_low >= self.x_high {
            return Err(Error::Config(format!(
                "case1 needs x_low < x_high; got {} >= {}",
                self.x_low, self.x_high
            )));
        }
        if self.noise_std < 0.0 {
            return Err(Error::Config("case1 noise_std must be >= 0".into()));
        }
        LinearPhysics::new(self.physics_c, self.physics_d)?;
        Ok(())
    }

    /// Noise-free response at `x`.
    pub fn truth(&self, x: f64) -> f64 {
        self.a * x * x + self.b
    }

    pub fn physics(&self) -> Result<LinearPhysics> {
        LinearPhysics::new(self.physics_c, self.physics_d)
    }
}

/// Magnitude of `1 / (s^2 + s + a0_true)` at `omega ~ U[omega_low, omega_high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Case2Config {
    pub a0_true: f64,
    pub a0_model: f64,
    pub omega_low: f64,
    pub omega_high: f64,
    pub noise_std: f64,
}

impl Default for Case2Config {
    fn default() -> Self {
        Self {
            a0_true: 4.1,
            a0_model: 4.4,
            omega_low: 0.0,
            omega_high: 10.0,
            noise_std: 0.0,
        }
    }
}

impl Case2Config {
    pub fn validate(&self) -> Result<()> {
        SecondOrderFrf::new(self.a0_true)?;
        SecondOrderFrf::new(self.a0_model)?;
        if !(self.omega_low.is_finite() && self.omega_high.is_finite())
            || self.omega_low >= self.omega_high
            || self.omega_low < 0.0
        {
            return Err(Error::Config(format!(
                "case2 needs 0 <= omega_low < omega_high; got [{}, {}]",
                self.omega_low, self.omega_high
            )));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::Config("case2 noise_std must be >= 0".into()));
        }
        Ok(())
    }

    pub fn truth(&self) -> Result<SecondOrderFrf> {
        SecondOrderFrf::new(self.a0_true)
    }

    pub fn physics(&self) -> Result<SecondOrderFrf> {
        SecondOrderFrf::new(self.a0_model)
    }
}

pub fn sample_case1(cfg: &Case1Config, n: usize, rng: &mut Rng) -> Result<DataBatch> {
    cfg.validate()?;
    require_points(n)?;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.uniform(cfg.x_low, cfg.x_high);
        let noise = cfg.noise_std * rng.normal();
        xs.push(x);
        ys.push(cfg.truth(x) + noise);
    }
    DataBatch::from_scalars(xs, ys)
}

pub fn sample_case2(cfg: &Case2Config, n: usize, rng: &mut Rng) -> Result<DataBatch> {
    cfg.validate()?;
    require_points(n)?;
    let plant = cfg.truth()?;
    let mut omegas = Vec::with_capacity(n);
    let mut mags = Vec::with_capacity(n);
    for _ in 0..n {
        let omega = rng.uniform(cfg.omega_low, cfg.omega_high);
        let noise = cfg.noise_std * rng.normal();
        omegas.push(omega);
        mags.push(plant.magnitude(omega) + noise);
    }
    DataBatch::from_scalars(omegas, mags)
}

fn require_points(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Usage("sample size must be at least 1".into()))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pinned_range(lo: f64, hi: f64) -> Case1Config {
        Case1Config {
            noise_std: 0.0,
            x_low: lo,
            x_high: hi,
            ..Case1Config::default()
        }
    }

    #[test]
    fn case1_noiseless_endpoints() {
        let cfg = Case1Config::default();
        assert_eq!(cfg.truth(0.0), 15.0);
        assert_eq!(cfg.truth(10.0), 25.0);

        // A vanishing range pins x to the origin.
        let batch = sample_case1(&pinned_range(0.0, 1e-300), 3, &mut Rng::new(1)).unwrap();
        for (_, y) in batch.iter() {
            assert_eq!(y, 15.0);
        }
    }

    #[test]
    fn case1_noise_statistics() {
        let cfg = Case1Config::default();
        let batch = sample_case1(&cfg, 10_000, &mut Rng::new(2024)).unwrap();
        let resid: Vec<f64> = batch.iter().map(|(x, y)| y - cfg.truth(x[0])).collect();
        let n = resid.len() as f64;
        let mean = resid.iter().sum::<f64>() / n;
        let std = (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((0.48..=0.52).contains(&std), "std {std}");
    }

    #[test]
    fn case1_inputs_stay_in_range() {
        let cfg = Case1Config::default();
        let batch = sample_case1(&cfg, 5000, &mut Rng::new(8)).unwrap();
        assert!(batch.inputs().iter().all(|x| (0.0..=10.0).contains(&x[0])));
    }

    #[test]
    fn two_draws_per_point() {
        let mut a = Rng::new(77);
        sample_case1(&Case1Config::default(), 25, &mut a).unwrap();
        let mut b = Rng::new(77);
        for _ in 0..50 {
            b.next_u64();
        }
        assert_eq!(a, b);

        let mut c = Rng::new(77);
        sample_case2(&Case2Config::default(), 25, &mut c).unwrap();
        assert_eq!(c, b);
    }

    #[test]
    fn noiseless_targets_are_exact_functions() {
        let cfg = Case1Config {
            noise_std: 0.0,
            ..Case1Config::default()
        };
        let batch = sample_case1(&cfg, 100, &mut Rng::new(4)).unwrap();
        assert!(batch.iter().all(|(x, y)| y == cfg.truth(x[0])));
    }

    #[test]
    fn case2_analytic_points() {
        let cfg = Case2Config::default();
        let plant = cfg.truth().unwrap();
        assert!((plant.magnitude(0.0) - 0.243902).abs() < 1e-6);
        assert!((plant.magnitude(4.1f64.sqrt()) - 0.493865).abs() < 1e-6);

        let at_dc = Case2Config {
            omega_low: 0.0,
            omega_high: 1e-300,
            ..cfg
        };
        let batch = sample_case2(&at_dc, 2, &mut Rng::new(0)).unwrap();
        assert!(batch.iter().all(|(_, y)| y == 1.0 / 4.1));
    }

    #[test]
    fn case2_targets_bounded_by_peak() {
        for noise_std in [0.0, 0.001] {
            let cfg = Case2Config {
                noise_std,
                ..Case2Config::default()
            };
            let batch = sample_case2(&cfg, 5000, &mut Rng::new(6)).unwrap();
            for (w, y) in batch.iter() {
                assert!((0.0..=10.0).contains(&w[0]));
                assert!(y <= 0.5097 + 3.0 * noise_std + 1e-12);
                if noise_std == 0.0 {
                    assert!(y > 0.0);
                }
            }
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = Case1Config {
            x_low: 5.0,
            x_high: 5.0,
            ..Case1Config::default()
        };
        assert!(sample_case1(&bad, 1, &mut Rng::new(0)).is_err());
        let bad = Case2Config {
            a0_true: 0.0,
            ..Case2Config::default()
        };
        assert!(sample_case2(&bad, 1, &mut Rng::new(0)).is_err());
        assert!(sample_case1(&Case1Config::default(), 0, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn batch_validation() {
        assert!(DataBatch::from_scalars(vec![], vec![]).is_err());
        assert!(DataBatch::from_scalars(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(DataBatch::from_scalars(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn csv_export_round_trips() {
        let batch = sample_case1(&Case1Config::default(), 20, &mut Rng::new(3)).unwrap();
        let mut buf = Vec::new();
        batch.write_csv(&mut buf, "x,y").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y"));
        for ((x, y), line) in batch.iter().zip(lines) {
            let (a, b) = line.split_once(',').unwrap();
            assert_eq!(a.parse::<f64>().unwrap().to_bits(), x[0].to_bits());
            assert_eq!(b.parse::<f64>().unwrap().to_bits(), y.to_bits());
        }
    }
}
