//! L-infinity norms, the loop robustness margin `b_{P,C}` and the optimal
//! margins `b_opt` in both time directions.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;

use crate::care::{self, Extremal};
use crate::linalg;
use crate::statespace::{self, time_conjugate, StateSpace};
use crate::{Direction, Error, Result};

/// Relative gap between the certified upper bound and the attained value
/// returned by [`linf_norm`].
pub const NORM_RTOL: f64 = 1e-10;

const GRID_POINTS: usize = 512;

fn log_grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (Float::log10(lo), Float::log10(hi));
    (0..points).map(move |k| Float::powf(10f64, a + (b - a) * k as f64 / (points - 1) as f64))
}

/// Hamiltonian whose imaginary eigenvalues `jw` are the frequencies at which
/// `gamma` is a singular value of `G(jw)`.
fn level_hamiltonian(g: &StateSpace, gamma: f64) -> Option<DMatrix<f64>> {
    let (a, b, c, d) = (&g.a, &g.b, &g.c, &g.d);
    let m = g.ninputs();
    let p = g.noutputs();
    let r = DMatrix::<f64>::identity(m, m) * (gamma * gamma) - d.transpose() * d;
    let ri = linalg::inverse(&r)?;
    let n = g.nstates();
    let ae = a + b * &ri * d.transpose() * c;
    let top_right = b * &ri * b.transpose();
    let bottom_left =
        -(c.transpose() * (DMatrix::<f64>::identity(p, p) + d * &ri * d.transpose()) * c);
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&ae);
    h.view_mut((0, n), (n, n)).copy_from(&top_right);
    h.view_mut((n, 0), (n, n)).copy_from(&bottom_left);
    h.view_mut((n, n), (n, n)).copy_from(&(-ae.transpose()));
    Some(h)
}

/// `sup_w sigma_max(G(jw))`, for systems without imaginary-axis poles.
///
/// A grid scan supplies a lower bound; the level-crossing Hamiltonian then
/// either certifies `(1 + NORM_RTOL)` times that bound or reveals the
/// frequency bands where the bound is exceeded, whose midpoints give the next
/// lower bound.
pub fn linf_norm(g: &StateSpace) -> Result<f64> {
    let d_norm = linalg::norm2(&g.d);
    if g.nstates() == 0 {
        return Ok(d_norm);
    }
    let report = statespace::stability_classify(g)?;
    if !report.l2_double_axis_bounded {
        return Err(Error::NormUndefined);
    }
    let mut candidates: Vec<f64> = log_grid(1e-4, 1e4, GRID_POINTS).collect();
    candidates.push(0.0);
    candidates.extend(
        report
            .eigenvalues
            .iter()
            .map(|z| z.im.abs())
            .filter(|w| *w > 0.0),
    );
    let mut best = d_norm;
    for &w in &candidates {
        best = best.max(g.sigma_max(w)?);
    }
    if best == 0.0 {
        return Ok(0.0);
    }
    for _ in 0..60 {
        let gamma = best * (1.0 + NORM_RTOL);
        let h = match level_hamiltonian(g, gamma) {
            Some(h) => h,
            None => return Ok(best),
        };
        let mut crossings: Vec<f64> = linalg::eigenvalues(&h)?
            .into_iter()
            .filter(|z| linalg::on_axis(*z, 1e-8) && z.im >= 0.0)
            .map(|z| z.im)
            .collect();
        if crossings.is_empty() {
            return Ok(best);
        }
        crossings.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        let mut improved = best;
        for pair in crossings.windows(2) {
            improved = improved.max(g.sigma_max(0.5 * (pair[0] + pair[1]))?);
        }
        for &w in &crossings {
            improved = improved.max(g.sigma_max(w)?);
        }
        if improved <= best {
            return Ok(best);
        }
        best = improved;
    }
    Ok(best)
}

/// Robustness margin of a feedback loop.
#[derive(Clone, Debug)]
pub struct MarginReport {
    /// `1 / ||H_{P,C}||_inf` for internally stable loops, otherwise 0.
    pub b: f64,
    /// `+inf` for loops that are not internally stable.
    pub hinf_norm_h: f64,
    pub internally_f_stable: bool,
}

pub fn b_margin(p: &StateSpace, c: &StateSpace) -> Result<MarginReport> {
    let loop_map = statespace::closed_loop_map(p, c)?;
    let h = match (&loop_map.realization, loop_map.well_posed) {
        (Some(h), true) => h,
        _ => return Err(Error::IllPosedLoop),
    };
    if !loop_map.internally_f_stable {
        return Ok(MarginReport {
            b: 0.0,
            hinf_norm_h: f64::INFINITY,
            internally_f_stable: false,
        });
    }
    let norm = linf_norm(h)?;
    Ok(MarginReport {
        b: 1.0 / norm,
        hinf_norm_h: norm,
        internally_f_stable: true,
    })
}

/// The matrices behind an optimal-margin value.
#[derive(Clone, Debug)]
pub struct BoptWitness {
    /// Extremal solution of the filter Riccati equation (zero when the plant
    /// is not stabilizable in the requested direction).
    pub y: DMatrix<f64>,
    /// Solution of the `Y`-dependent Lyapunov equation.
    pub x: DMatrix<f64>,
    pub lambda_max_yx: f64,
    pub b_opt: f64,
    pub direction: Direction,
    pub stabilizable: bool,
    pub riccati_residual: f64,
    pub lyapunov_residual: f64,
}

struct FilterData {
    a0: DMatrix<f64>,
    gc: DMatrix<f64>,
    qb: DMatrix<f64>,
}

/// `A0 = A - B D' R^{-1} C`, `G = C' R^{-1} C`, `Q = B (I - D' R^{-1} D) B'`
/// with `R = I + D D'`.
fn filter_data(p: &StateSpace) -> Result<FilterData> {
    let pdim = p.noutputs();
    let mdim = p.ninputs();
    let r = DMatrix::<f64>::identity(pdim, pdim) + &p.d * p.d.transpose();
    let ri = linalg::inverse(&r).ok_or(Error::InvalidArgument("I + DD' singular"))?;
    let a0 = &p.a - &p.b * p.d.transpose() * &ri * &p.c;
    let gc = linalg::symmetrized(p.c.transpose() * &ri * &p.c);
    let inner = DMatrix::<f64>::identity(mdim, mdim) - p.d.transpose() * &ri * &p.d;
    let qb = linalg::symmetrized(&p.b * inner * p.b.transpose());
    Ok(FilterData { a0, gc, qb })
}

fn witness(p: &StateSpace, which: Extremal, direction: Direction) -> Result<BoptWitness> {
    let n = p.nstates();
    let fd = filter_data(p)?;
    // A0 Y + Y A0' - Y G Y + Q = 0 is the regulator form with A0' in place of A
    let sol = match care::solve_are(&fd.a0.transpose(), &fd.gc, &fd.qb, which) {
        Ok(sol) => sol,
        Err(Error::NoExtremalSolution) => {
            return Ok(BoptWitness {
                y: DMatrix::zeros(n, n),
                x: DMatrix::zeros(n, n),
                lambda_max_yx: 1.0,
                b_opt: 0.0,
                direction,
                stabilizable: false,
                riccati_residual: f64::NAN,
                lyapunov_residual: f64::NAN,
            })
        }
        Err(e) => return Err(e),
    };
    let y = sol.s;
    let f = &fd.a0 - &y * &fd.gc;
    let x = care::solve_lyapunov(&f, &fd.gc)?;
    let lyapunov_residual = (f.transpose() * &x + &x * &f + &fd.gc).norm();
    let lambda = linalg::lambda_max_product(&y, &x, which == Extremal::Antistabilizing);
    Ok(BoptWitness {
        y,
        x,
        lambda_max_yx: lambda,
        b_opt: Float::sqrt((1.0 - lambda).max(0.0)),
        direction,
        stabilizable: true,
        riccati_residual: sol.residual,
        lyapunov_residual,
    })
}

/// Optimal robustness margin `b_opt,f(P)`, or `b_opt,b(P) = b_opt,f(J(P))`.
///
/// A plant whose realization hides a mode on the wrong side of the imaginary
/// axis for the requested direction has no stabilizing filter Riccati
/// solution and reports `stabilizable = false`, `b_opt = 0`.
pub fn b_opt(p: &StateSpace, direction: Direction) -> Result<BoptWitness> {
    match direction {
        Direction::Forward => witness(p, Extremal::Stabilizing, Direction::Forward),
        Direction::Backward => witness(
            &time_conjugate(p),
            Extremal::Stabilizing,
            Direction::Backward,
        ),
    }
}

/// `b_opt,b(P)` from the antistabilizing (negative definite) filter Riccati
/// solution `Y-` of the plant itself and its Lyapunov partner `X-`.
pub fn b_opt_backward_extremal(p: &StateSpace) -> Result<BoptWitness> {
    witness(p, Extremal::Antistabilizing, Direction::Backward)
}
