//! Real-coefficient polynomials, their roots, and the Hurwitz spectral factor.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{Float, Zero};

use crate::linalg;
use crate::{Error, Result};

/// Default relative tolerance for classifying a root as lying on the
/// imaginary axis.
pub const AXIS_TOL: f64 = 1e-9;

/// Relative distance below which a numerator and a denominator root are
/// treated as a common factor.
pub const COPRIME_TOL: f64 = 1e-6;

/// A real polynomial, coefficients stored lowest degree first.
///
/// Trailing zero coefficients are stripped, so the last stored coefficient is
/// the leading one. The zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    /// Build from coefficients listed highest degree first.
    pub fn from_descending(coeffs: &[f64]) -> Self {
        Polynomial::new(coeffs.iter().rev().copied().collect())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    /// `s`.
    pub fn s() -> Self {
        Polynomial::new(vec![0.0, 1.0])
    }

    /// `lead * prod (s - r)`; complex roots must come in conjugate pairs for
    /// the result to be meaningful, the imaginary residue is discarded.
    pub fn from_roots(roots: &[Complex64], lead: f64) -> Self {
        let mut c = vec![Complex64::new(lead, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::zero(); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Polynomial::new(c.into_iter().map(|z| z.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Coefficient of `s^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn eval_complex(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::zero(), |acc, &c| acc * s + c)
    }

    /// `p(-s)`.
    pub fn reflect(&self) -> Self {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| if k % 2 == 1 { -c } else { c })
                .collect(),
        )
    }

    pub fn scale(&self, k: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn derivative(&self) -> Self {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Divide by the leading coefficient.
    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(1.0 / self.leading())
    }

    /// Zero out coefficients below `rtol` times the largest one.
    pub fn trimmed(&self, rtol: f64) -> Self {
        self.chopped(rtol * self.max_abs_coeff())
    }

    /// Zero out coefficients whose magnitude is at most `cut`.
    pub fn chopped(&self, cut: f64) -> Self {
        Polynomial::new(
            self.coeffs
                .iter()
                .map(|&c| if c.abs() <= cut { 0.0 } else { c })
                .collect(),
        )
    }

    /// Polynomial long division, `self = q * divisor + r`.
    pub fn div_rem(&self, divisor: &Polynomial) -> Result<(Polynomial, Polynomial)> {
        if divisor.is_zero() {
            return Err(Error::InvalidArgument("division by the zero polynomial"));
        }
        if self.coeffs.len() < divisor.coeffs.len() {
            return Ok((Polynomial::zero(), self.clone()));
        }
        let dn = divisor.degree();
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; self.coeffs.len() - dn];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dn] / lead;
            quot[k] = q;
            for (j, &dc) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * dc;
            }
            rem[k + dn] = 0.0;
        }
        rem.truncate(dn);
        Ok((Polynomial::new(quot), Polynomial::new(rem)))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

/// Roots of a polynomial with a half-plane census.
#[derive(Clone, Debug)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub lhp_count: usize,
    pub rhp_count: usize,
    pub axis_count: usize,
    pub axis_tolerance: f64,
}

impl RootSet {
    fn classify(roots: Vec<Complex64>, axis_tolerance: f64) -> Self {
        let mut lhp_count = 0;
        let mut rhp_count = 0;
        let mut axis_count = 0;
        for &r in &roots {
            if linalg::on_axis(r, axis_tolerance) {
                axis_count += 1;
            } else if r.re < 0.0 {
                lhp_count += 1;
            } else {
                rhp_count += 1;
            }
        }
        RootSet {
            roots,
            lhp_count,
            rhp_count,
            axis_count,
            axis_tolerance,
        }
    }
}

/// Roots with the default axis tolerance.
pub fn roots(p: &Polynomial) -> Result<RootSet> {
    roots_with_tolerance(p, AXIS_TOL)
}

pub fn roots_with_tolerance(p: &Polynomial, axis_tolerance: f64) -> Result<RootSet> {
    Ok(RootSet::classify(raw_roots(p)?, axis_tolerance))
}

/// Companion-matrix eigenvalues followed by a few guarded Newton steps.
pub(crate) fn raw_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    if p.is_zero() {
        return Err(Error::UndefinedRoots);
    }
    let zeros_at_origin = p.coeffs.iter().take_while(|&&c| c == 0.0).count();
    let reduced = Polynomial::new(p.coeffs[zeros_at_origin..].to_vec());
    let mut out = vec![Complex64::zero(); zeros_at_origin];
    let n = reduced.degree();
    if n == 0 {
        return Ok(out);
    }
    let lead = reduced.leading();
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -reduced.coeffs[n - 1 - j] / lead;
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    let dp = reduced.derivative();
    for r in linalg::eigenvalues(&companion)? {
        out.push(polish(&reduced, &dp, r));
    }
    Ok(out)
}

fn polish(p: &Polynomial, dp: &Polynomial, mut r: Complex64) -> Complex64 {
    let real = r.im == 0.0;
    let mut fr = p.eval_complex(r).norm();
    for _ in 0..3 {
        let d = dp.eval_complex(r);
        if d.norm() == 0.0 {
            break;
        }
        let mut cand = r - p.eval_complex(r) / d;
        if real {
            cand.im = 0.0;
        }
        let fc = p.eval_complex(cand).norm();
        if fc.is_finite() && fc < fr {
            r = cand;
            fr = fc;
        } else {
            break;
        }
    }
    r
}

/// Hurwitz spectral factor `d` with `d(-s) d(s) = n(-s) n(s) + m(-s) m(s)`.
///
/// The right-hand side is even in `s`, so it is rooted as a polynomial in
/// `z = s^2`; each root `z` contributes the left-half-plane square root.
/// The leading coefficient of `d` is positive.
pub fn spectral_factor(n: &Polynomial, m: &Polynomial) -> Result<Polynomial> {
    let p = &(&n.reflect() * n) + &(&m.reflect() * m);
    if p.is_zero() {
        return Err(Error::DegenerateSpectralFactorization);
    }
    let half: Vec<f64> = p.coeffs.iter().step_by(2).copied().collect();
    let q = Polynomial::new(half);
    let k = q.degree();
    let lead_sq = if k.is_multiple_of(2) {
        q.leading()
    } else {
        -q.leading()
    };
    if lead_sq <= 0.0 {
        return Err(Error::DegenerateSpectralFactorization);
    }
    let lead = Float::sqrt(lead_sq);
    if k == 0 {
        return Ok(Polynomial::constant(lead));
    }
    let mut factor_roots = Vec::with_capacity(k);
    for z in raw_roots(&q)? {
        let s = -z.sqrt();
        if linalg::on_axis(s, AXIS_TOL) {
            return Err(Error::DegenerateSpectralFactorization);
        }
        factor_roots.push(s);
    }
    Ok(Polynomial::from_roots(&factor_roots, lead))
}

/// A rational function `num / den`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction {
    pub num: Polynomial,
    pub den: Polynomial,
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidArgument("zero denominator"));
        }
        Ok(TransferFunction { num, den })
    }

    pub fn constant(k: f64) -> Self {
        TransferFunction {
            num: Polynomial::constant(k),
            den: Polynomial::constant(1.0),
        }
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    /// `P(-s)`.
    pub fn reflect(&self) -> Self {
        TransferFunction {
            num: self.num.reflect(),
            den: self.den.reflect(),
        }
    }

    /// Cancel numerator/denominator roots closer than `tol` (relative) and
    /// make the denominator monic.
    pub fn reduced(&self, tol: f64) -> Result<Self> {
        let den_lead = self.den.leading();
        if self.num.is_zero() {
            return Ok(TransferFunction {
                num: Polynomial::zero(),
                den: Polynomial::constant(1.0),
            });
        }
        if self.num.degree() == 0 || self.den.degree() == 0 {
            return Ok(TransferFunction {
                num: self.num.scale(1.0 / den_lead),
                den: self.den.monic(),
            });
        }
        let zeros = raw_roots(&self.num)?;
        let mut poles = raw_roots(&self.den)?;
        let mut kept_zeros = Vec::new();
        let mut cancelled = false;
        for z in zeros {
            let best = poles
                .iter()
                .enumerate()
                .map(|(i, p)| (i, (z - p).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
            match best {
                Some((i, dist)) if dist <= tol * (1.0 + z.norm()) => {
                    poles.remove(i);
                    cancelled = true;
                }
                _ => kept_zeros.push(z),
            }
        }
        if !cancelled {
            return Ok(TransferFunction {
                num: self.num.scale(1.0 / den_lead),
                den: self.den.monic(),
            });
        }
        Ok(TransferFunction {
            num: Polynomial::from_roots(&kept_zeros, self.num.leading() / den_lead),
            den: Polynomial::from_roots(&poles, 1.0),
        })
    }
}

/// Value of `num(jw) / den(jw)`.
pub fn eval_axis(tf: &TransferFunction, omega: f64) -> Result<Complex64> {
    let s = Complex64::new(0.0, omega);
    let den = tf.den.eval_complex(s);
    let scale: f64 = tf
        .den
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| c.abs() * Float::powi(omega.abs(), k as i32))
        .sum();
    if den.norm() <= 1e-10 * scale {
        return Err(Error::AxisPole { omega });
    }
    Ok(tf.num.eval_complex(s) / den)
}
