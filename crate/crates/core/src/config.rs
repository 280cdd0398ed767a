//! TOML run configuration.
//!
//! Every section is optional; an empty document yields the defaults listed in
//! the README. Unknown keys and duplicate keys are rejected.

use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::collab::{Policy, Scenario, StopRule, Truth};
use crate::design::{MapGrid, PredictionMode};
use crate::inference::{linspace, StateGrid};
use crate::world::{CircleState, Field, SensorModel};

/// Posterior draws per histogram in sampled mode unless configured.
pub const DEFAULT_SAMPLES: usize = 45;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config value `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    const fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    fn values(&self, field: &str) -> Result<Vec<f64>, ConfigError> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(invalid(field, "bounds must be finite"));
        }
        if self.count == 0 {
            return Err(invalid(field, "count must be at least 1"));
        }
        if self.count > 1 && self.min >= self.max {
            return Err(invalid(
                field,
                format!("min {} must be below max {}", self.min, self.max),
            ));
        }
        Ok(linspace(self.min, self.max, self.count))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawStateGrid {
    x: AxisSpec,
    y: AxisSpec,
    r: AxisSpec,
}

impl Default for RawStateGrid {
    fn default() -> Self {
        Self {
            x: AxisSpec::new(0.0, 100.0, 50),
            y: AxisSpec::new(0.0, 100.0, 50),
            r: AxisSpec::new(3.0, 12.0, 10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawMapGrid {
    x: AxisSpec,
    y: AxisSpec,
}

impl Default for RawMapGrid {
    fn default() -> Self {
        Self {
            x: AxisSpec::new(0.0, 100.0, 50),
            y: AxisSpec::new(0.0, 100.0, 50),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ModeName {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPrediction {
    mode: ModeName,
    samples: usize,
}

impl Default for RawPrediction {
    fn default() -> Self {
        Self {
            mode: ModeName::Exact,
            samples: DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum RawTruth {
    Named(String),
    Circle(RawCircle),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircle {
    x: f64,
    y: f64,
    r: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawMapSection {
    warmup_rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawCompare {
    policies: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawConfig {
    seed: u64,
    field: Field,
    state_grid: RawStateGrid,
    map_grid: RawMapGrid,
    sensor: SensorModel,
    policy: String,
    stop: StopRule,
    prediction: RawPrediction,
    truth: RawTruth,
    map: RawMapSection,
    compare: RawCompare,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            field: Field::default(),
            state_grid: RawStateGrid::default(),
            map_grid: RawMapGrid::default(),
            sensor: SensorModel::default(),
            policy: Policy::JointExhaustive.to_string(),
            stop: StopRule::default(),
            prediction: RawPrediction::default(),
            truth: RawTruth::Named("random".into()),
            map: RawMapSection::default(),
            compare: RawCompare::default(),
        }
    }
}

/// A validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub field: Field,
    pub grid: Arc<StateGrid>,
    pub map: MapGrid,
    pub sensor: SensorModel,
    pub policy: Policy,
    pub stop: StopRule,
    pub mode: PredictionMode,
    pub truth: Truth,
    /// Rounds played before `map` renders its maps.
    pub warmup_rounds: usize,
    /// Policies run by `compare`.
    pub compare_policies: Vec<Policy>,
}

impl RunConfig {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            grid: Arc::clone(&self.grid),
            map: self.map.clone(),
            sensor: self.sensor,
            policy: self.policy,
            stop: self.stop,
            mode: self.mode,
            truth: self.truth,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

fn check_axis_in(field: &str, values: &[f64], lo: f64, hi: f64) -> Result<(), ConfigError> {
    match values.iter().find(|v| !(lo..=hi).contains(*v)) {
        Some(v) => Err(invalid(
            field,
            format!("{v} lies outside the field [{lo}, {hi}]"),
        )),
        None => Ok(()),
    }
}

fn parse_policy(field: &str, name: &str) -> Result<Policy, ConfigError> {
    name.parse().map_err(|e| invalid(field, format!("{e}")))
}

/// Parses and validates a TOML configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let field = raw.field;
    field
        .validate()
        .map_err(|e| invalid("field", e.to_string()))?;

    let xs = raw.state_grid.x.values("state_grid.x")?;
    let ys = raw.state_grid.y.values("state_grid.y")?;
    let rs = raw.state_grid.r.values("state_grid.r")?;
    check_axis_in("state_grid.x", &xs, field.x_min, field.x_max)?;
    check_axis_in("state_grid.y", &ys, field.y_min, field.y_max)?;
    if let Some(r) = rs.iter().find(|r| **r <= 0.0) {
        return Err(invalid(
            "state_grid.r",
            format!("radius {r} must be positive"),
        ));
    }
    let grid = StateGrid::new(xs, ys, rs).map_err(|e| invalid("state_grid", e.to_string()))?;

    let mxs = raw.map_grid.x.values("map_grid.x")?;
    let mys = raw.map_grid.y.values("map_grid.y")?;
    check_axis_in("map_grid.x", &mxs, field.x_min, field.x_max)?;
    check_axis_in("map_grid.y", &mys, field.y_min, field.y_max)?;
    let map = MapGrid::new(mxs, mys).map_err(|e| invalid("map_grid", e.to_string()))?;

    raw.sensor
        .validate()
        .map_err(|e| invalid("sensor", e.to_string()))?;
    let policy = parse_policy("policy", &raw.policy)?;
    raw.stop
        .validate()
        .map_err(|e| invalid("stop", e.to_string()))?;

    let mode = match raw.prediction.mode {
        ModeName::Exact => PredictionMode::Exact,
        ModeName::Sampled => {
            if raw.prediction.samples == 0 {
                return Err(invalid("prediction.samples", "must be at least 1"));
            }
            PredictionMode::Sampled {
                samples: raw.prediction.samples,
                seed: 0,
            }
        }
    };

    let truth = match raw.truth {
        RawTruth::Named(name) if name == "random" => Truth::Random,
        RawTruth::Named(name) => {
            return Err(invalid(
                "truth",
                format!("expected \"random\" or a table, got {name:?}"),
            ))
        }
        RawTruth::Circle(c) => {
            let circle =
                CircleState::new(c.x, c.y, c.r).map_err(|e| invalid("truth", e.to_string()))?;
            if !field.contains(circle.x, circle.y) {
                return Err(invalid("truth", "center lies outside the field"));
            }
            Truth::Fixed(circle)
        }
    };

    let compare_policies = match raw.compare.policies {
        None => Policy::ALL.to_vec(),
        Some(names) => {
            if names.is_empty() {
                return Err(invalid("compare.policies", "list is empty"));
            }
            names
                .iter()
                .map(|n| parse_policy("compare.policies", n))
                .collect::<Result<_, _>>()?
        }
    };

    Ok(RunConfig {
        seed: raw.seed,
        field,
        grid: Arc::new(grid),
        map,
        sensor: raw.sensor,
        policy,
        stop: raw.stop,
        mode,
        truth,
        warmup_rounds: raw.map.warmup_rounds,
        compare_policies,
    })
}
