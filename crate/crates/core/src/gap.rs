//! Normalized coprime fractions, the L2-gap and the forward/backward nu-gaps
//! of SISO plants.
//!
//! With `P_i = n_i / m_i` coprime and `d_i` the Hurwitz factor of
//! `n_i(-s)n_i(s) + m_i(-s)m_i(s)`, the graph symbol is `[m_i/d_i; n_i/d_i]`.
//! The winding condition of the nu-gap is decided by counting the roots of
//! `h(s) = m_2(-s)m_1(s) + n_2(-s)n_1(s)` in each half-plane.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::poly::{self, Polynomial, TransferFunction, COPRIME_TOL};
use crate::robust;
use crate::statespace::{self, StateSpace};
use crate::{Direction, Error, Result};

/// Distance from 1 below which the L2-gap counts as saturated.
pub const SATURATION_TOL: f64 = 1e-9;

/// A coprime fraction `n / m` (monic `m`) with its spectral cofactor `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFraction {
    pub n: Polynomial,
    pub m: Polynomial,
    pub d: Polynomial,
    pub mcmillan_degree: usize,
}

impl RationalFraction {
    pub fn transfer(&self) -> TransferFunction {
        TransferFunction {
            num: self.n.clone(),
            den: self.m.clone(),
        }
    }

    /// Normalized fraction of `P(-s)`.
    pub fn time_conjugate(&self) -> Result<RationalFraction> {
        normalized_fraction(&self.transfer().reflect())
    }

    /// Graph symbol `[m/d; n/d]` evaluated at `s`.
    pub fn graph_symbol(&self, s: Complex64) -> [Complex64; 2] {
        let d = self.d.eval_complex(s);
        [self.m.eval_complex(s) / d, self.n.eval_complex(s) / d]
    }
}

pub fn normalized_fraction(tf: &TransferFunction) -> Result<RationalFraction> {
    if !tf.is_proper() {
        return Err(Error::ImproperTransferFunction);
    }
    let reduced = tf.reduced(COPRIME_TOL)?;
    let d = poly::spectral_factor(&reduced.num, &reduced.den)?;
    let mcmillan_degree = reduced.den.degree();
    Ok(RationalFraction {
        n: reduced.num,
        m: reduced.den,
        d,
        mcmillan_degree,
    })
}

pub fn normalized_fraction_ss(p: &StateSpace) -> Result<RationalFraction> {
    normalized_fraction(&statespace::ss_to_tf(p)?)
}

/// `||G~_2 G_1||_inf`, the L-infinity norm of
/// `(m_2 n_1 - n_2 m_1) / (d_2 d_1)`, through the Hamiltonian norm routine.
pub fn delta_l2(p1: &RationalFraction, p2: &RationalFraction) -> Result<f64> {
    let num = &(&p2.m * &p1.n) - &(&p2.n * &p1.m);
    let den = &p2.d * &p1.d;
    let scale = (&p2.m * &p1.n)
        .max_abs_coeff()
        .max((&p2.n * &p1.m).max_abs_coeff());
    let num = num.chopped(1e-14 * scale);
    if num.is_zero() {
        return Ok(0.0);
    }
    let g = statespace::realize(&TransferFunction::new(num, den)?)?;
    Ok(robust::linf_norm(&g)?.clamp(0.0, 1.0))
}

/// Chordal distance between two points of the Riemann sphere; `None` is the
/// point at infinity.
pub fn chordal(a: Option<Complex64>, b: Option<Complex64>) -> f64 {
    match (a, b) {
        (None, None) => 0.0,
        (None, Some(z)) | (Some(z), None) => 1.0 / Float::sqrt(1.0 + z.norm_sqr()),
        (Some(x), Some(y)) => {
            (x - y).norm() / (Float::sqrt(1.0 + x.norm_sqr()) * Float::sqrt(1.0 + y.norm_sqr()))
        }
    }
}

fn value_at(tf: &TransferFunction, omega: f64) -> Option<Complex64> {
    poly::eval_axis(tf, omega).ok()
}

fn value_at_infinity(tf: &TransferFunction) -> Option<Complex64> {
    if tf.num.is_zero() || tf.num.degree() < tf.den.degree() {
        Some(Complex64::new(0.0, 0.0))
    } else if tf.num.degree() == tf.den.degree() {
        Some(Complex64::new(tf.num.leading() / tf.den.leading(), 0.0))
    } else {
        None
    }
}

const GRID_POINTS: usize = 4096;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Maximise `f(10^x)` on `[lo, hi]` by golden-section search.
pub(crate) fn golden_max(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    iterations: usize,
) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(Float::powf(10f64, c));
    let mut fd = f(Float::powf(10f64, d));
    for _ in 0..iterations {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(Float::powf(10f64, c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(Float::powf(10f64, d));
        }
    }
    if fc >= fd {
        (Float::powf(10f64, c), fc)
    } else {
        (Float::powf(10f64, d), fd)
    }
}

/// Supremum of `f` over `[0, inf]` from a log grid on `[1e-4, 1e4]`, the two
/// end values, and golden-section polishing of the best interior bumps.
/// Returns `(omega, value)`; `omega` is `inf` when the limit wins.
pub(crate) fn grid_sup(f: impl Fn(f64) -> f64, at_zero: f64, at_infinity: f64) -> (f64, f64) {
    let xs: Vec<f64> = (0..GRID_POINTS)
        .map(|k| -4.0 + 8.0 * k as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(Float::powf(10f64, x))).collect();
    let mut best = (0.0, at_zero);
    if at_infinity > best.1 {
        best = (f64::INFINITY, at_infinity);
    }
    let mut peaks: Vec<usize> = (1..GRID_POINTS - 1)
        .filter(|&k| vals[k] >= vals[k - 1] && vals[k] >= vals[k + 1])
        .collect();
    peaks.sort_by(|&a, &b| {
        vals[b]
            .partial_cmp(&vals[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    peaks.truncate(4);
    for (k, &v) in vals.iter().enumerate() {
        if v > best.1 {
            best = (Float::powf(10f64, xs[k]), v);
        }
    }
    for k in peaks {
        let (w, v) = golden_max(&f, xs[k - 1], xs[k + 1], 80);
        if v > best.1 {
            best = (w, v);
        }
    }
    best
}

/// Grid evaluation of the supremal chordal distance between the frequency
/// responses; independent of the spectral factors.
pub fn delta_l2_grid(p1: &TransferFunction, p2: &TransferFunction) -> f64 {
    let f = |w: f64| chordal(value_at(p1, w), value_at(p2, w));
    let (_, v) = grid_sup(
        f,
        f(0.0),
        chordal(value_at_infinity(p1), value_at_infinity(p2)),
    );
    v
}

/// Half-plane root census of `h(s) = m_2(-s)m_1(s) + n_2(-s)n_1(s)`.
#[derive(Clone, Debug)]
pub struct WindingReport {
    pub h: Polynomial,
    /// Roots of `h` in the open left half-plane.
    pub deg_h_plus: usize,
    /// Roots of `h` in the open right half-plane.
    pub deg_h_minus: usize,
    pub mu1: usize,
    pub mu2: usize,
}

pub fn winding_classify(p1: &RationalFraction, p2: &RationalFraction) -> Result<WindingReport> {
    let h = &(&p2.m.reflect() * &p1.m) + &(&p2.n.reflect() * &p1.n);
    let h = h.trimmed(1e-13);
    if h.is_zero() {
        return Err(Error::WindingUndefined);
    }
    let (deg_h_plus, deg_h_minus) = if h.degree() == 0 {
        (0, 0)
    } else {
        let r = poly::roots(&h)?;
        if r.axis_count > 0 {
            return Err(Error::WindingUndefined);
        }
        (r.lhp_count, r.rhp_count)
    };
    Ok(WindingReport {
        h,
        deg_h_plus,
        deg_h_minus,
        mu1: p1.mcmillan_degree,
        mu2: p2.mcmillan_degree,
    })
}

#[derive(Clone, Debug)]
pub struct GapReport {
    pub delta_l2: f64,
    /// `None` when the L2-gap is saturated and `h` was not examined.
    pub winding: Option<WindingReport>,
    pub vgap_f: f64,
    pub vgap_b: f64,
    pub winding_defined: bool,
    /// `mu1 == mu2 == deg h+ == deg h-`.
    pub equal_degrees: bool,
}

impl GapReport {
    pub fn value(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Forward => self.vgap_f,
            Direction::Backward => self.vgap_b,
        }
    }
}

/// Forward and backward nu-gaps.
///
/// `delta_v,f = delta_L2` iff `h` has exactly `mu1` roots in the open left
/// half-plane, `delta_v,b = delta_L2` iff it has exactly `mu1` in the open
/// right half-plane; otherwise the respective gap is 1.
pub fn vgap(p1: &RationalFraction, p2: &RationalFraction) -> Result<GapReport> {
    let delta = delta_l2(p1, p2)?;
    let saturated = GapReport {
        delta_l2: delta,
        winding: None,
        vgap_f: 1.0,
        vgap_b: 1.0,
        winding_defined: false,
        equal_degrees: false,
    };
    if delta >= 1.0 - SATURATION_TOL {
        return Ok(saturated);
    }
    let w = match winding_classify(p1, p2) {
        Ok(w) => w,
        Err(Error::WindingUndefined) => return Ok(saturated),
        Err(e) => return Err(e),
    };
    let vgap_f = if w.deg_h_plus == w.mu1 { delta } else { 1.0 };
    let vgap_b = if w.deg_h_minus == w.mu1 { delta } else { 1.0 };
    let equal_degrees = w.mu1 == w.mu2 && w.deg_h_plus == w.mu1 && w.deg_h_minus == w.mu1;
    Ok(GapReport {
        delta_l2: delta,
        winding: Some(w),
        vgap_f,
        vgap_b,
        winding_defined: true,
        equal_degrees,
    })
}

/// Nu-gap in one direction; the backward gap is literally the forward gap of
/// the time-conjugated pair.
pub fn vgap_directed(
    p1: &RationalFraction,
    p2: &RationalFraction,
    direction: Direction,
) -> Result<f64> {
    match direction {
        Direction::Forward => Ok(vgap(p1, p2)?.vgap_f),
        Direction::Backward => Ok(vgap(&p1.time_conjugate()?, &p2.time_conjugate()?)?.vgap_f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn frac(num: &[f64], den: &[f64]) -> RationalFraction {
        normalized_fraction(
            &TransferFunction::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
                .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn fractions_of_simple_plants() {
        let one = frac(&[1.0], &[1.0]);
        assert_eq!(one.mcmillan_degree, 0);
        assert_relative_eq!(one.d.coeff(0), 2f64.sqrt());
        let integ = frac(&[1.0], &[0.0, 1.0]);
        assert_eq!(integ.mcmillan_degree, 1);
        assert_relative_eq!(integ.d.coeff(0), 1.0, epsilon = 1e-14);
        assert_relative_eq!(integ.d.coeff(1), 1.0, epsilon = 1e-14);
        // 1/(s-1): d(-s)d(s) = 2 - s^2, d = s + sqrt 2
        let unstable = frac(&[1.0], &[-1.0, 1.0]);
        assert_relative_eq!(unstable.d.coeff(0), 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(unstable.d.coeff(1), 1.0, epsilon = 1e-14);
        for &w in &[0.0, 0.3, 7.0] {
            let s = Complex64::new(0.0, w);
            let [a, b] = unstable.graph_symbol(s);
            assert_relative_eq!(a.norm_sqr() + b.norm_sqr(), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn improper_plants_are_rejected() {
        let tf = TransferFunction::new(
            Polynomial::new([0.0, 1.0].to_vec()),
            Polynomial::constant(1.0),
        )
        .unwrap();
        assert_eq!(
            normalized_fraction(&tf).unwrap_err(),
            Error::ImproperTransferFunction
        );
    }

    #[test]
    fn l2_gaps() {
        let one = frac(&[1.0], &[1.0]);
        let integ = frac(&[1.0], &[0.0, 1.0]);
        let dbl = frac(&[1.0], &[0.0, 0.0, 1.0]);
        assert_eq!(delta_l2(&integ, &integ).unwrap(), 0.0);
        // chordal distance between 1 and 1/(jw) is 1/sqrt 2 at every w
        for &w in &[0.01, 1.0, 50.0] {
            let p2 = Complex64::new(0.0, -1.0 / w);
            assert_relative_eq!(
                chordal(Some(Complex64::new(1.0, 0.0)), Some(p2)),
                1.0 / 2f64.sqrt(),
                epsilon = 1e-15
            );
        }
        assert_relative_eq!(
            delta_l2(&one, &integ).unwrap(),
            1.0 / 2f64.sqrt(),
            epsilon = 1e-9
        );
        // chordal distance between 1 and -1/w^2 equals 1 at w = 1
        assert_relative_eq!(
            chordal(
                Some(Complex64::new(1.0, 0.0)),
                Some(Complex64::new(-1.0, 0.0))
            ),
            1.0
        );
        assert_relative_eq!(delta_l2(&one, &dbl).unwrap(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(
            delta_l2_grid(&one.transfer(), &dbl.transfer()),
            1.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn winding_census() {
        let one = frac(&[1.0], &[1.0]);
        let integ = frac(&[1.0], &[0.0, 1.0]);
        let neg = frac(&[-1.0], &[0.0, 1.0]);
        let w = winding_classify(&one, &integ).unwrap();
        assert_eq!(w.h, Polynomial::new([1.0, -1.0].to_vec()));
        assert_eq!((w.deg_h_plus, w.deg_h_minus, w.mu1, w.mu2), (0, 1, 0, 1));
        let w = winding_classify(&one, &neg).unwrap();
        assert_eq!(w.h, Polynomial::new([-1.0, -1.0].to_vec()));
        assert_eq!((w.deg_h_plus, w.deg_h_minus), (1, 0));
        let lag = frac(&[1.0], &[1.0, 1.0]);
        let w = winding_classify(&lag, &lag).unwrap();
        assert_eq!(w.h, Polynomial::new([2.0, 0.0, -1.0].to_vec()));
        assert_eq!((w.deg_h_plus, w.deg_h_minus, w.mu1), (1, 1, 1));
        let g = vgap(&lag, &lag).unwrap();
        assert_eq!(g.vgap_f, 0.0);
        assert!(g.equal_degrees);
    }

    #[test]
    fn orthogonal_graphs_have_undefined_winding() {
        // P1 = 1, P2 = -1: graphs [1;1]/sqrt2 and [1;-1]/sqrt2 are orthogonal
        let e = winding_classify(&frac(&[1.0], &[1.0]), &frac(&[-1.0], &[1.0])).unwrap_err();
        assert_eq!(e, Error::WindingUndefined);
        let g = vgap(&frac(&[1.0], &[1.0]), &frac(&[-1.0], &[1.0])).unwrap();
        assert!(!g.winding_defined);
        assert_eq!((g.vgap_f, g.vgap_b), (1.0, 1.0));
    }

    #[test]
    fn nu_gaps_of_degree_mismatch() {
        let one = frac(&[1.0], &[1.0]);
        let integ = frac(&[1.0], &[0.0, 1.0]);
        let neg = frac(&[-1.0], &[0.0, 1.0]);
        let dbl = frac(&[1.0], &[0.0, 0.0, 1.0]);
        let g = vgap(&one, &integ).unwrap();
        assert_relative_eq!(g.vgap_f, 1.0 / 2f64.sqrt(), epsilon = 1e-9);
        assert_eq!(g.vgap_b, 1.0);
        let g = vgap(&one, &neg).unwrap();
        assert_eq!(g.vgap_f, 1.0);
        assert_relative_eq!(g.vgap_b, 1.0 / 2f64.sqrt(), epsilon = 1e-9);
        let g = vgap(&one, &dbl).unwrap();
        assert_eq!((g.vgap_f, g.vgap_b), (1.0, 1.0));
        assert_eq!(
            vgap_directed(&one, &integ, Direction::Backward).unwrap(),
            1.0
        );
    }
}
