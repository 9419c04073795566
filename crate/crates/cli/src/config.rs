//! Run configuration: built-in defaults, then an optional flat JSON file,
//! then individual command-line flags. All three layers go through
//! [`RunSettings::set`], so they share one key namespace.

use std::path::PathBuf;

use physinet::{Case1Config, Case2Config, Scenario, TrainerConfig};
use serde_json::Value;
use thiserror::Error;

/// Every key accepted in a config file or by `--set`.
pub const KEYS: &[&str] = &[
    "case",
    "seeds",
    "steps",
    "points-per-step",
    "epochs",
    "minibatch",
    "lr",
    "test-size",
    "out",
    "a",
    "b",
    "noise-std",
    "x-low",
    "x-high",
    "physics-c",
    "physics-d",
    "a0-true",
    "a0-model",
    "omega-low",
    "omega-high",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown configuration key {key:?}; valid keys are: {}", KEYS.join(", "))]
    UnknownKey { key: String },

    #[error("invalid value for {key}: {reason}")]
    InvalidValue { key: String, reason: String },

    #[error("config file must be a flat JSON object: {0}")]
    Malformed(String),

    #[error("{0}")]
    Missing(&'static str),

    #[error(transparent)]
    Model(#[from] physinet::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CaseKind {
    Case1,
    Case2,
}

impl CaseKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseKind::Case1 => "case1",
            CaseKind::Case2 => "case2",
        }
    }
}

impl std::str::FromStr for CaseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "case1" => Ok(CaseKind::Case1),
            "case2" => Ok(CaseKind::Case2),
            other => Err(format!("expected case1 or case2, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub case: Option<CaseKind>,
    pub seeds: Vec<u64>,
    pub trainer: TrainerConfig,
    pub case1: Case1Config,
    pub case2: Case2Config,
    pub output_dir: PathBuf,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            case: None,
            seeds: Vec::new(),
            trainer: TrainerConfig::default(),
            case1: Case1Config::default(),
            case2: Case2Config::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunSettings {
    /// Applies every key of a flat JSON object, in document order.
    pub fn apply_json(&mut self, text: &str) -> Result<(), ConfigError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(ConfigError::Malformed("top level is not an object".into()));
        };
        for (key, v) in &map {
            self.set(key, v)?;
        }
        Ok(())
    }

    /// Applies `key=value`; the value is parsed as JSON when possible and
    /// taken as a string otherwise.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, raw) = assignment.split_once('=').ok_or_else(|| {
            ConfigError::Malformed(format!("expected key=value, got {assignment:?}"))
        })?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
        self.set(key.trim(), &value)
    }

    pub fn set(&mut self, key: &str, value: &Value) -> Result<(), ConfigError> {
        let t = &mut self.trainer;
        match key {
            "case" => {
                self.case = Some(
                    as_str(key, value)?
                        .parse()
                        .map_err(|reason| invalid(key, reason))?,
                )
            }
            "seeds" => self.seeds = parse_seeds(key, value)?,
            "steps" => t.steps = as_usize(key, value)?,
            "points-per-step" => t.points_per_step = as_usize(key, value)?,
            "epochs" => t.epochs_per_step = as_usize(key, value)?,
            "minibatch" => t.minibatch_size = as_usize(key, value)?,
            "lr" => t.learning_rate = as_f64(key, value)?,
            "test-size" => t.test_set_size = as_usize(key, value)?,
            "out" => self.output_dir = PathBuf::from(as_str(key, value)?),
            "a" => self.case1.a = as_f64(key, value)?,
            "b" => self.case1.b = as_f64(key, value)?,
            "noise-std" => {
                let v = as_f64(key, value)?;
                self.case1.noise_std = v;
                self.case2.noise_std = v;
            }
            "x-low" => self.case1.x_low = as_f64(key, value)?,
            "x-high" => self.case1.x_high = as_f64(key, value)?,
            "physics-c" => self.case1.physics_c = as_f64(key, value)?,
            "physics-d" => self.case1.physics_d = as_f64(key, value)?,
            "a0-true" => self.case2.a0_true = as_f64(key, value)?,
            "a0-model" => self.case2.a0_model = as_f64(key, value)?,
            "omega-low" => self.case2.omega_low = as_f64(key, value)?,
            "omega-high" => self.case2.omega_high = as_f64(key, value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_owned(),
                })
            }
        }
        Ok(())
    }

    pub fn case(&self) -> Result<CaseKind, ConfigError> {
        self.case.ok_or(ConfigError::Missing(
            "no case given (use --case or a config file)",
        ))
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        Ok(match self.case()? {
            CaseKind::Case1 => Scenario::Case1(self.case1),
            CaseKind::Case2 => Scenario::Case2(self.case2),
        })
    }

    pub fn trainer_for(&self, seed: u64) -> TrainerConfig {
        TrainerConfig {
            seed,
            ..self.trainer.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seeds.is_empty() {
            return Err(ConfigError::Missing(
                "at least one seed is required (--seeds)",
            ));
        }
        self.scenario()?.validate()?;
        self.trainer.validate()?;
        Ok(())
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_owned(),
        reason: reason.into(),
    }
}

fn as_str<'a>(key: &str, value: &'a Value) -> Result<&'a str, ConfigError> {
    value
        .as_str()
        .ok_or_else(|| invalid(key, format!("expected a string, got {value}")))
}

fn as_f64(key: &str, value: &Value) -> Result<f64, ConfigError> {
    let v = match value {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    };
    v.filter(|v: &f64| v.is_finite())
        .ok_or_else(|| invalid(key, format!("expected a finite number, got {value}")))
}

fn as_u64(key: &str, value: &Value) -> Result<u64, ConfigError> {
    let v = match value {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    };
    v.ok_or_else(|| invalid(key, format!("expected a non-negative integer, got {value}")))
}

fn as_usize(key: &str, value: &Value) -> Result<usize, ConfigError> {
    usize::try_from(as_u64(key, value)?).map_err(|e| invalid(key, e.to_string()))
}

fn parse_seeds(key: &str, value: &Value) -> Result<Vec<u64>, ConfigError> {
    let seeds = match value {
        Value::Array(items) => items
            .iter()
            .map(|v| as_u64(key, v))
            .collect::<Result<Vec<_>, _>>()?,
        Value::String(s) => s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| as_u64(key, &Value::String(p.to_owned())))
            .collect::<Result<Vec<_>, _>>()?,
        Value::Number(_) => vec![as_u64(key, value)?],
        _ => return Err(invalid(key, format!("expected a seed list, got {value}"))),
    };
    if seeds.is_empty() {
        return Err(invalid(key, "empty seed list"));
    }
    Ok(seeds)
}
