//! Flag parsing and the top-level run loop.

use std::path::PathBuf;

use clap::Parser;
use serde_json::{json, Value};

use crate::commands::{self, RunError};
use crate::config::{Command, ConfigError, ConfigFile, OutputFormat, Params, RunConfig};
use crate::output;
use crate::svg;

#[derive(Debug, Parser)]
#[command(
    name = "arrowgap",
    version,
    about = "Forward/backward-time LQR, nu-gap, margin and delay analysis"
)]
pub struct Cli {
    #[arg(long, value_enum)]
    pub command: Option<Command>,
    /// JSON file with `command`, `params`, `output` and `plot`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub output: Option<OutputFormat>,
    /// Write an SVG plot (bicycle-sweep, demo-all).
    #[arg(long, value_name = "PATH.svg")]
    pub plot: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[arg(long = "V-min")]
    pub v_min: Option<f64>,
    #[arg(long = "V-max")]
    pub v_max: Option<f64>,
    #[arg(long = "V-step")]
    pub v_step: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// `f` (forward) or `b` (backward).
    #[arg(long)]
    pub direction: Option<String>,
    /// Set any parameter to a JSON value, e.g. `--set 'A=[[0,1],[-2,-3]]'`.
    #[arg(long = "set", value_name = "KEY=JSON")]
    pub set: Vec<String>,
}

impl Cli {
    /// Config file first, then `--set`, then the dedicated flags.
    pub fn into_config(self) -> Result<RunConfig, ConfigError> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let mut params = Params(file.params);
        for item in &self.set {
            let (key, raw) = item.split_once('=').ok_or_else(|| {
                ConfigError::new("--set", format!("expected KEY=JSON, got {item:?}"))
            })?;
            let value: Value = serde_json::from_str(raw).map_err(|e| {
                ConfigError::new(key, format!("invalid JSON at column {}: {e}", e.column()))
            })?;
            params.set(key, value);
        }
        let scalars = [
            ("tau", self.tau),
            ("V-min", self.v_min),
            ("V-max", self.v_max),
            ("V-step", self.v_step),
            ("epsilon", self.epsilon),
        ];
        for (key, v) in scalars {
            if let Some(v) = v {
                params.set(key, json!(v));
            }
        }
        if let Some(d) = &self.direction {
            crate::config::parse_direction(d).map_err(|m| ConfigError::new("--direction", m))?;
            params.set("direction", json!(d));
        }
        let command = self
            .command
            .or(file.command)
            .ok_or_else(|| ConfigError::new("--command", "no command given"))?;
        Ok(RunConfig {
            command,
            params,
            output_format: self.output.or(file.output).unwrap_or_default(),
            plot_path: self.plot.or(file.plot),
        })
    }
}

/// Runs a configuration; returns the text for stdout and the exit status.
pub fn execute(cfg: &RunConfig) -> (String, i32) {
    let outcome = commands::run(cfg).and_then(|o| {
        if let Some(path) = &cfg.plot_path {
            let rows = o.sweep.as_ref().ok_or_else(|| {
                ConfigError::new("--plot", "only bicycle-sweep and demo-all produce a plot")
            })?;
            std::fs::write(path, svg::render_sweep(rows))
                .map_err(|e| ConfigError::new("--plot", format!("{}: {e}", path.display())))?;
        }
        Ok::<_, RunError>(o)
    });
    match outcome {
        Ok(o) => {
            let text = match cfg.output_format {
                OutputFormat::Json => output::success_json(cfg.command, &cfg.params, &o),
                OutputFormat::Csv => output::csv(&o.table),
            };
            (text, if o.passed { 0 } else { 1 })
        }
        Err(e) => (output::error_json(Some(cfg.command), &cfg.params, &e), 2),
    }
}

/// Parses arguments and runs; configuration errors are reported in the same
/// JSON envelope as solver errors.
pub fn main_with<I, T>(args: I) -> Result<(String, i32), clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let command = cli.command;
    Ok(match cli.into_config() {
        Ok(cfg) => execute(&cfg),
        Err(e) => (
            output::error_json(command, &Params::default(), &RunError::Config(e)),
            2,
        ),
    })
}
