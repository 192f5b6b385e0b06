//! The integrator loop with a delay or predictor,
//! `x'(t) + x(t - tau) = d(t)`, compared with the delay-free loop.
//!
//! Positive `tau` is a delay, negative `tau` a prediction. Winding numbers of
//! the transcendental functions here are obtained by phase continuation with
//! adaptive step bisection.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::gap::{golden_max, grid_sup};
use crate::linalg;
use crate::statespace::{self, StateSpace};
use crate::{Error, Result};

/// Largest admissible phase increment per contour step.
const MAX_STEP_PHASE: f64 = PI / 2.0;
const MAX_BISECTIONS: u32 = 48;
const INITIAL_PIECES: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct DelayLoop {
    pub tau: f64,
    pub contour_radius: f64,
}

impl DelayLoop {
    pub fn new(tau: f64) -> Self {
        DelayLoop {
            tau,
            contour_radius: default_radius(tau),
        }
    }
}

/// `100 + 10/|tau|`, enough to capture the first root clusters whose spacing
/// scales with `2 pi / |tau|`.
pub fn default_radius(tau: f64) -> f64 {
    if tau == 0.0 {
        100.0
    } else {
        100.0 + 10.0 / tau.abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopStability {
    pub f_stable: bool,
    /// Zeros of `s + e^{-s tau}` with `Re s > 0` and `|s| < R`.
    pub rhp_root_count: usize,
    pub contour_radius: f64,
}

/// Phase change of `s + e^{-s tau}` from `s1` to `s2`, or `None` when the
/// step is too coarse to be trusted. When the exponential dominates the
/// factor `e^{-s tau}` is split off and its phase taken exactly, which keeps
/// large contours free of overflow.
fn quasi_poly_step(tau: f64, s1: Complex64, s2: Complex64) -> Option<f64> {
    // the exponential rotates by up to |tau||ds|; keep it from aliasing
    if tau.abs() * (s2 - s1).norm() > MAX_STEP_PHASE / 2.0 {
        return None;
    }
    let mid = (s1 + s2) * 0.5;
    let (exact, r1, r2) = if (-mid * tau).re > 0.0 {
        let rest = |s: Complex64| Complex64::new(1.0, 0.0) + s * (s * tau).exp();
        (-tau * (s2.im - s1.im), rest(s1), rest(s2))
    } else {
        let f = |s: Complex64| s + (-s * tau).exp();
        (0.0, f(s1), f(s2))
    };
    if r1.norm() == 0.0 || r2.norm() == 0.0 || !r1.is_finite() || !r2.is_finite() {
        return None;
    }
    let principal = (r2 / r1).arg();
    (exact.abs() < MAX_STEP_PHASE && principal.abs() < MAX_STEP_PHASE).then_some(exact + principal)
}

/// Accumulated phase of a function along the path `t -> path(t)`,
/// `t in [t0, t1]`, bisecting any step whose increment is not resolved.
fn accumulate_phase(
    t0: f64,
    t1: f64,
    path: impl Fn(f64) -> Complex64,
    step: impl Fn(Complex64, Complex64) -> Option<f64>,
) -> Result<f64> {
    let h = (t1 - t0) / INITIAL_PIECES as f64;
    let mut total = 0.0;
    let mut stack: Vec<(f64, f64, u32)> = (0..INITIAL_PIECES)
        .rev()
        .map(|k| {
            (
                t0 + h * k as f64,
                if k + 1 == INITIAL_PIECES {
                    t1
                } else {
                    t0 + h * (k + 1) as f64
                },
                0,
            )
        })
        .collect();
    while let Some((a, b, depth)) = stack.pop() {
        match step(path(a), path(b)) {
            Some(d) => total += d,
            None if depth < MAX_BISECTIONS => {
                let m = 0.5 * (a + b);
                stack.push((m, b, depth + 1));
                stack.push((a, m, depth + 1));
            }
            None => return Err(Error::ContourResolutionExceeded),
        }
    }
    Ok(total)
}

/// Counts the right half-plane zeros of `s + e^{-s tau}` inside radius `R`
/// with the argument principle on the truncated D-contour.
pub fn delay_loop_stability(tau: f64, radius: f64) -> Result<LoopStability> {
    if radius.is_nan() || radius <= 10.0 || !tau.is_finite() {
        return Err(Error::InvalidArgument("contour radius must exceed 10"));
    }
    let step = |a, b| quasi_poly_step(tau, a, b);
    // arc from -jR through R to +jR, then down the imaginary axis
    let arc = accumulate_phase(
        -PI / 2.0,
        PI / 2.0,
        |t| Complex64::from_polar(radius, t),
        step,
    )?;
    let axis = accumulate_phase(radius, -radius, |w| Complex64::new(0.0, w), step)?;
    let turns = (arc + axis) / (2.0 * PI);
    let count = Float::round(turns);
    if (turns - count).abs() > 1e-6 || count < 0.0 {
        return Err(Error::ContourResolutionExceeded);
    }
    let rhp_root_count = count as usize;
    Ok(LoopStability {
        f_stable: rhp_root_count == 0,
        rhp_root_count,
        contour_radius: radius,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelayGapReport {
    pub tau: f64,
    pub delta_l2: f64,
    /// Winding number, along the imaginary axis `|w| <= R`, of the inner
    /// product of the two graph symbols.
    pub winding: i64,
    pub vgap_f: f64,
    pub attained_omega: f64,
}

/// `(w / (1 + w^2)) |1 - e^{-j w tau}|`, the chordal distance between
/// `1/(jw)` and `e^{-j w tau}/(jw)`.
pub fn delay_chordal(tau: f64, omega: f64) -> f64 {
    let e = Complex64::new(0.0, -omega * tau).exp();
    omega.abs() / (1.0 + omega * omega) * (Complex64::new(1.0, 0.0) - e).norm()
}

/// Inner product of the graph symbols of `1/s` and of the delayed or
/// predicted plant at `s = jw`, divided by `1 + w^2`.
///
/// For a delay the fraction of `e^{-s tau}/s` is `(e^{-s tau}, s)`; for a
/// prediction the bounded factor moves to the denominator, `(1, s e^{s tau})`.
fn graph_inner(tau: f64, omega: f64) -> Complex64 {
    let w2 = omega * omega;
    let num = if tau >= 0.0 {
        Complex64::new(w2, 0.0) + Complex64::new(0.0, omega * tau).exp()
    } else {
        Complex64::new(0.0, -omega * tau).exp() * w2 + 1.0
    };
    num / (1.0 + w2)
}

fn axis_winding(tau: f64, radius: f64) -> Result<i64> {
    let step = |a: Complex64, b: Complex64| {
        if tau.abs() * (b.im - a.im).abs() > MAX_STEP_PHASE / 2.0 {
            return None;
        }
        let (ga, gb) = (graph_inner(tau, a.im), graph_inner(tau, b.im));
        if ga.norm() < 1e-300 || gb.norm() < 1e-300 {
            return None;
        }
        let d = (gb / ga).arg();
        (d.abs() < MAX_STEP_PHASE).then_some(d)
    };
    // conjugate symmetry: the phase over [-R, 0] equals that over [0, R]
    let half = accumulate_phase(0.0, radius, |w| Complex64::new(0.0, w), step)?;
    Ok(Float::round(2.0 * half / (2.0 * PI)) as i64)
}

/// The L2-gap and forward nu-gap between the integrator `1/s` and
/// `e^{-s tau}/s`, for `|tau| < pi`.
pub fn delay_gap(tau: f64) -> Result<DelayGapReport> {
    if tau.is_nan() || tau.abs() >= PI {
        return Err(Error::OutsideAnalysisWindow { tau });
    }
    let (attained_omega, delta_l2) = if tau == 0.0 {
        (0.0, 0.0)
    } else {
        grid_sup(|w| delay_chordal(tau, w), 0.0, 0.0)
    };
    let winding = axis_winding(tau, default_radius(tau))?;
    Ok(DelayGapReport {
        tau,
        delta_l2: delta_l2.clamp(0.0, 1.0),
        winding,
        vgap_f: if winding == 0 { delta_l2 } else { 1.0 },
        attained_omega,
    })
}

/// `sup_{w >= Omega} |P(jw) C(jw)|`. A log grid up to a frequency beyond
/// which `|D| + |c||b| / (w - |A|)` bounds the gain below the grid value is
/// polished by golden-section search; biproper products report `|D_P D_C|`
/// when it is not below one.
pub fn loop_gain_sup(p: &StateSpace, c: &StateSpace, omega: f64) -> Result<f64> {
    if omega.is_nan() || omega <= 0.0 {
        return Err(Error::InvalidArgument("Omega must be positive"));
    }
    if !p.is_siso() || !c.is_siso() {
        return Err(Error::SisoOnly);
    }
    let l = statespace::series(c, p)?;
    let d = l.d[(0, 0)].abs();
    if d >= 1.0 {
        return Ok(d);
    }
    let gain = |w: f64| {
        l.freq_response(w)
            .map(|g| g[(0, 0)].norm())
            .unwrap_or(f64::INFINITY)
    };
    let na = linalg::norm2(&l.a);
    let cb = linalg::norm2(&l.b) * linalg::norm2(&l.c);
    // tail bound d + cb/(w - na) <= (1 + d)/2 for w >= w_tail
    let w_tail = na + 2.0 * cb / (1.0 - d) + 1.0;
    let hi = w_tail.max(10.0 * omega);
    let (x0, x1) = (Float::log10(omega), Float::log10(hi));
    let n = 4096;
    let xs: Vec<f64> = (0..n)
        .map(|k| x0 + (x1 - x0) * k as f64 / (n - 1) as f64)
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| gain(Float::powf(10f64, x))).collect();
    let mut best = vals.iter().cloned().fold(d, f64::max);
    for k in 1..n - 1 {
        if vals[k] >= vals[k - 1] && vals[k] >= vals[k + 1] && vals[k] >= 0.9 * best {
            best = best.max(golden_max(gain, xs[k - 1], xs[k + 1], 60).1);
        }
    }
    Ok(best)
}

/// Whether the loop gain stays below one at all frequencies `>= Omega`.
pub fn loop_gain_check(p: &StateSpace, c: &StateSpace, omega: f64) -> Result<bool> {
    Ok(loop_gain_sup(p, c, omega)? < 1.0)
}
