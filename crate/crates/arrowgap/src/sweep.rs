//! Optimal margins of the bicycle model over a grid of forward speeds.

use arrowgap_core::{robust, statespace, Direction};
use rayon::prelude::*;

use crate::config::ConfigError;

#[derive(Clone, Debug, PartialEq)]
pub struct BicycleParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub v_grid: Vec<f64>,
}

impl Default for BicycleParams {
    fn default() -> Self {
        BicycleParams {
            alpha: 1.0 / 3.0,
            beta: 2.0,
            gamma: 9.0,
            v_grid: speed_grid(0.25, 10.0, 0.25).unwrap_or_default(),
        }
    }
}

/// `v_min, v_min + step, ...` up to `v_max` inclusive (within rounding).
pub fn speed_grid(v_min: f64, v_max: f64, step: f64) -> Result<Vec<f64>, ConfigError> {
    if ![step, v_min, v_max].iter().all(|x| x.is_finite())
        || step <= 0.0
        || v_min <= 0.0
        || v_max < v_min
    {
        return Err(ConfigError::new(
            "V-step",
            "need 0 < V-min <= V-max and V-step > 0",
        ));
    }
    let count = ((v_max - v_min) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(ConfigError::new("V-step", "too many grid points"));
    }
    Ok((0..count).map(|k| v_min + step * k as f64).collect())
}

impl BicycleParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(ConfigError::new(name, "must be positive"));
            }
        }
        if self.v_grid.is_empty()
            || self.v_grid[0] <= 0.0
            || self.v_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(ConfigError::new(
                "V-min",
                "speed grid must be positive and strictly increasing",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub v: f64,
    pub b_opt_f: f64,
    pub b_opt_b: f64,
    /// Solver failure recorded for this row; the affected margin is set to 0.
    pub flag: Option<String>,
}

fn margin(p: &statespace::StateSpace, direction: Direction, flags: &mut Vec<String>) -> f64 {
    match robust::b_opt(p, direction) {
        Ok(w) => w.b_opt,
        Err(e) => {
            flags.push(format!("{}: {e}", direction.as_str()));
            0.0
        }
    }
}

/// Rows are computed in parallel and returned in grid order.
pub fn bicycle_sweep(params: &BicycleParams) -> Vec<SweepRow> {
    params
        .v_grid
        .par_iter()
        .map(|&v| {
            let p = statespace::bicycle(params.alpha, params.beta, params.gamma, v);
            let mut flags = Vec::new();
            let b_opt_f = margin(&p, Direction::Forward, &mut flags);
            let b_opt_b = margin(&p, Direction::Backward, &mut flags);
            SweepRow {
                v,
                b_opt_f,
                b_opt_b,
                flag: (!flags.is_empty()).then(|| flags.join("; ")),
            }
        })
        .collect()
}
