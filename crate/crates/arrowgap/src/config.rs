//! Run configuration: the command, its parameters and the output options.
//!
//! Parameters are a flat JSON object. Matrices are row-major nested arrays;
//! a bare number is a 1x1 matrix and a flat array is a single row (or, for
//! vectors, a column). Plants are either `{"num": [...], "den": [...]}` with
//! coefficients in descending powers of `s`, or `{"A", "B", "C", "D"}`.

use std::fmt;
use std::path::{Path, PathBuf};

use arrowgap_core::poly::{Polynomial, TransferFunction};
use arrowgap_core::statespace::{self, StateSpace};
use arrowgap_core::Direction;
use clap::ValueEnum;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    LqrFinite,
    LqrInfinite,
    Bopt,
    Gap,
    Margin,
    BicycleSweep,
    Delay,
    DemoAll,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::LqrFinite => "lqr-finite",
            Command::LqrInfinite => "lqr-infinite",
            Command::Bopt => "bopt",
            Command::Gap => "gap",
            Command::Margin => "margin",
            Command::BicycleSweep => "bicycle-sweep",
            Command::Delay => "delay",
            Command::DemoAll => "demo-all",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: Params,
    pub output_format: OutputFormat,
    pub plot_path: Option<PathBuf>,
}

/// On-disk form of a [`RunConfig`]; every field can be overridden by flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub command: Option<Command>,
    #[serde(default)]
    pub params: Map<String, Value>,
    pub output: Option<OutputFormat>,
    pub plot: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            ConfigError::new(
                "--config",
                format!(
                    "{}: line {}, column {}: {e}",
                    path.display(),
                    e.line(),
                    e.column()
                ),
            )
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Typed access to the parameter map. Every accessor names the offending key
/// in its error.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params(pub Map<String, Value>);

fn number(field: &str, v: &Value) -> Result<f64, ConfigError> {
    v.as_f64()
        .ok_or_else(|| ConfigError::new(field, "expected a number"))
}

fn numbers(field: &str, v: &Value) -> Result<Vec<f64>, ConfigError> {
    match v {
        Value::Array(items) => items.iter().map(|x| number(field, x)).collect(),
        other => Ok(vec![number(field, other)?]),
    }
}

fn matrix_from(field: &str, v: &Value) -> Result<DMatrix<f64>, ConfigError> {
    let rows: Vec<Vec<f64>> = match v {
        Value::Array(items) if items.iter().all(Value::is_array) => items
            .iter()
            .map(|r| numbers(field, r))
            .collect::<Result<_, _>>()?,
        Value::Array(items) if items.is_empty() => Vec::new(),
        Value::Array(_) => vec![numbers(field, v)?],
        other => vec![vec![number(field, other)?]],
    };
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ConfigError::new(field, "rows have different lengths"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn plant_from(field: &str, v: &Value) -> Result<StateSpace, ConfigError> {
    let obj = v
        .as_object()
        .ok_or_else(|| ConfigError::new(field, "expected a plant object"))?;
    let sub = |k: &str| format!("{field}.{k}");
    if obj.contains_key("num") || obj.contains_key("den") {
        let get = |k: &str| {
            obj.get(k)
                .ok_or_else(|| ConfigError::new(sub(k), "missing"))
                .and_then(|x| numbers(&sub(k), x))
        };
        let num = Polynomial::from_descending(&get("num")?);
        let den = Polynomial::from_descending(&get("den")?);
        let tf =
            TransferFunction::new(num, den).map_err(|e| ConfigError::new(field, e.to_string()))?;
        return statespace::realize(&tf).map_err(|e| ConfigError::new(field, e.to_string()));
    }
    Params(obj.clone()).state_space_with_prefix(field)
}

impl Params {
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    pub fn set(&mut self, key: impl Into<String>, value: Value) {
        self.0.insert(key.into(), value);
    }

    fn required(&self, key: &str) -> Result<&Value, ConfigError> {
        self.get(key)
            .ok_or_else(|| ConfigError::new(key, "required parameter missing"))
    }

    pub fn scalar(&self, key: &str) -> Result<f64, ConfigError> {
        number(key, self.required(key)?)
    }

    pub fn scalar_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.get(key).map_or(Ok(default), |v| number(key, v))
    }

    pub fn matrix(&self, key: &str) -> Result<DMatrix<f64>, ConfigError> {
        matrix_from(key, self.required(key)?)
    }

    pub fn matrix_or(&self, key: &str, default: DMatrix<f64>) -> Result<DMatrix<f64>, ConfigError> {
        self.get(key).map_or(Ok(default), |v| matrix_from(key, v))
    }

    pub fn vector(&self, key: &str) -> Result<DVector<f64>, ConfigError> {
        Ok(DVector::from_vec(numbers(key, self.required(key)?)?))
    }

    pub fn direction(&self) -> Result<Direction, ConfigError> {
        match self.get("direction") {
            None => Ok(Direction::Forward),
            Some(Value::String(s)) => {
                parse_direction(s).map_err(|m| ConfigError::new("direction", m))
            }
            Some(_) => Err(ConfigError::new("direction", "expected \"f\" or \"b\"")),
        }
    }

    /// A plant stored under `key` as a transfer function or state-space object.
    pub fn plant(&self, key: &str) -> Result<StateSpace, ConfigError> {
        plant_from(key, self.required(key)?)
    }

    /// `A`, `B`, `C` (and optionally `D`) stored at the top level.
    pub fn state_space(&self) -> Result<StateSpace, ConfigError> {
        self.state_space_with_prefix("")
    }

    fn state_space_with_prefix(&self, prefix: &str) -> Result<StateSpace, ConfigError> {
        let name = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        let get = |k: &str| {
            self.get(k)
                .ok_or_else(|| ConfigError::new(name(k), "required parameter missing"))
                .and_then(|v| matrix_from(&name(k), v))
        };
        let (a, b, c) = (get("A")?, get("B")?, get("C")?);
        let d = match self.get("D") {
            Some(v) => matrix_from(&name("D"), v)?,
            None => DMatrix::zeros(c.nrows(), b.ncols()),
        };
        StateSpace::new(a, b, c, d).map_err(|e| ConfigError::new(name("A"), e.to_string()))
    }
}

pub fn parse_direction(s: &str) -> Result<Direction, String> {
    match s {
        "f" | "forward" => Ok(Direction::Forward),
        "b" | "backward" => Ok(Direction::Backward),
        other => Err(format!("unknown direction {other:?}, expected f or b")),
    }
}
