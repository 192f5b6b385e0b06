//! Quadratic regulator costs for a plant run forwards or backwards in time.
//!
//! Forward problems integrate over `[0, T]` (or `[0, inf)`) from `x(0) = x0`;
//! backward problems over `[-T, 0]` (or `(-inf, 0]`) towards the same `x0`.

use nalgebra::{DMatrix, DVector};

use crate::care::{self, Extremal, RiccatiOde};
use crate::linalg;
use crate::statespace::StateSpace;
use crate::{Direction, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

/// Regulator data. The initial state is taken from `plant.x0`.
#[derive(Clone, Debug)]
pub struct LqrProblem {
    pub plant: StateSpace,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub horizon: Horizon,
    pub terminal_weight: DMatrix<f64>,
    pub direction: Direction,
}

impl LqrProblem {
    pub fn new(
        plant: StateSpace,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        horizon: Horizon,
        terminal_weight: Option<DMatrix<f64>>,
        direction: Direction,
    ) -> Result<Self> {
        let n = plant.nstates();
        if plant.d.iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidArgument("regulator plants must have D = 0"));
        }
        if q.shape() != (plant.noutputs(), plant.noutputs()) {
            return Err(Error::Dimension("Q must be outputs x outputs"));
        }
        if r.shape() != (plant.ninputs(), plant.ninputs()) {
            return Err(Error::Dimension("R must be inputs x inputs"));
        }
        if (&q - q.transpose()).norm() > 1e-12 * (1.0 + q.norm())
            || linalg::symmetric_eigenvalues(&q)
                .first()
                .copied()
                .unwrap_or(0.0)
                < -1e-12 * (1.0 + q.norm())
        {
            return Err(Error::InvalidArgument(
                "Q must be symmetric positive semidefinite",
            ));
        }
        if (&r - r.transpose()).norm() > 1e-12 * (1.0 + r.norm()) || r.clone().cholesky().is_none()
        {
            return Err(Error::InvalidArgument(
                "R must be symmetric positive definite",
            ));
        }
        let terminal_weight = terminal_weight.unwrap_or_else(|| DMatrix::zeros(n, n));
        if terminal_weight.shape() != (n, n) {
            return Err(Error::Dimension("H must be n x n"));
        }
        if (&terminal_weight - terminal_weight.transpose()).norm()
            > 1e-12 * (1.0 + terminal_weight.norm())
        {
            return Err(Error::InvalidArgument("H must be symmetric"));
        }
        if let Horizon::Finite(t) = horizon {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidArgument("horizon must be positive"));
            }
        }
        Ok(LqrProblem {
            plant,
            q,
            r,
            horizon,
            terminal_weight,
            direction,
        })
    }

    fn x0(&self) -> &DVector<f64> {
        &self.plant.x0
    }
}

/// The optimal feedback `u(t) = -K(t) x(t)` with `K(t) = R^{-1} B' S(t)`.
#[derive(Clone, Debug)]
pub struct GainSchedule {
    ode: RiccatiOde,
    gain_map: DMatrix<f64>,
    terminal_time: f64,
    terminal_value: DMatrix<f64>,
}

impl GainSchedule {
    /// `S(t)`.
    pub fn riccati_at(&self, t: f64) -> Result<DMatrix<f64>> {
        self.ode.solve(self.terminal_time, &self.terminal_value, t)
    }

    /// `K(t)`.
    pub fn gain_at(&self, t: f64) -> Result<DMatrix<f64>> {
        Ok(&self.gain_map * self.riccati_at(t)?)
    }
}

#[derive(Clone, Debug)]
pub struct FiniteLqr {
    pub cost: f64,
    /// `S(0)`.
    pub s0: DMatrix<f64>,
    pub schedule: GainSchedule,
    /// Richardson estimate of the integration error in `S(0)`.
    pub error_estimate: f64,
}

/// Forward: `S(T) = H`, cost `x0' S(0) x0`. Backward: `S(-T) = -H`, cost
/// `-x0' S(0) x0`. Both use the same Riccati differential equation.
pub fn lqr_cost_finite(prob: &LqrProblem) -> Result<FiniteLqr> {
    let horizon = match prob.horizon {
        Horizon::Finite(t) => t,
        Horizon::Infinite => return Err(Error::InvalidArgument("finite horizon required")),
    };
    let p = &prob.plant;
    let ode = RiccatiOde::new(&p.a, &p.b, &p.c, &prob.q, &prob.r)?;
    let (terminal_time, terminal_value, sign) = match prob.direction {
        Direction::Forward => (horizon, prob.terminal_weight.clone(), 1.0),
        Direction::Backward => (-horizon, -&prob.terminal_weight, -1.0),
    };
    let (s0, error_estimate) = ode.solve_with_estimate(terminal_time, &terminal_value, 0.0)?;
    let x0 = prob.x0();
    let cost = sign * (x0.transpose() * &s0 * x0)[(0, 0)];
    let r_inv = prob
        .r
        .clone()
        .cholesky()
        .ok_or(Error::InvalidArgument("R must be positive definite"))?
        .inverse();
    Ok(FiniteLqr {
        cost,
        s0,
        schedule: GainSchedule {
            ode,
            gain_map: r_inv * p.b.transpose(),
            terminal_time,
            terminal_value,
        },
        error_estimate,
    })
}

#[derive(Clone, Debug)]
pub struct InfiniteLqr {
    pub cost: f64,
    /// `S+` (forward) or `S-` (backward).
    pub s: DMatrix<f64>,
    pub residual: f64,
}

/// Forward: `x0' S+ x0`. Backward: `-x0' S- x0`.
pub fn lqr_cost_infinite(prob: &LqrProblem) -> Result<InfiniteLqr> {
    if prob.horizon != Horizon::Infinite {
        return Err(Error::InvalidArgument("infinite horizon required"));
    }
    let p = &prob.plant;
    let (which, sign) = match prob.direction {
        Direction::Forward => (Extremal::Stabilizing, 1.0),
        Direction::Backward => (Extremal::Antistabilizing, -1.0),
    };
    let sol = care::care_one(&p.a, &p.b, &p.c, &prob.q, &prob.r, which)?;
    let x0 = prob.x0();
    let cost = sign * (x0.transpose() * &sol.s * x0)[(0, 0)];
    Ok(InfiniteLqr {
        cost,
        s: sol.s,
        residual: sol.residual,
    })
}
