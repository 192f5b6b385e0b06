//! State-space systems, time conjugation, stability classes and the
//! two-block feedback interconnection.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::linalg;
use crate::poly::{Polynomial, TransferFunction, AXIS_TOL, COPRIME_TOL};
use crate::{Error, Result};

/// Relative rank tolerance for the controllability/observability staircase.
pub const RANK_TOL: f64 = 1e-8;

/// `x' = A x + B u`, `y = C x + D u`, `x(0) = x0`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub x0: DVector<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension("A must be square"));
        }
        if b.nrows() != n {
            return Err(Error::Dimension("B must have as many rows as A"));
        }
        if c.ncols() != n {
            return Err(Error::Dimension("C must have as many columns as A"));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension("D must be outputs x inputs"));
        }
        Ok(StateSpace {
            a,
            b,
            c,
            d,
            x0: DVector::zeros(n),
        })
    }

    pub fn with_x0(mut self, x0: DVector<f64>) -> Result<Self> {
        if x0.len() != self.nstates() {
            return Err(Error::Dimension("x0 must have one entry per state"));
        }
        self.x0 = x0;
        Ok(self)
    }

    /// One-state SISO system.
    pub fn scalar(a: f64, b: f64, c: f64, d: f64) -> Self {
        StateSpace {
            a: DMatrix::from_element(1, 1, a),
            b: DMatrix::from_element(1, 1, b),
            c: DMatrix::from_element(1, 1, c),
            d: DMatrix::from_element(1, 1, d),
            x0: DVector::zeros(1),
        }
    }

    /// Static SISO gain with no states.
    pub fn gain(k: f64) -> Self {
        StateSpace {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, 1),
            c: DMatrix::zeros(1, 0),
            d: DMatrix::from_element(1, 1, k),
            x0: DVector::zeros(0),
        }
    }

    pub fn nstates(&self) -> usize {
        self.a.nrows()
    }

    pub fn ninputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn noutputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_siso(&self) -> bool {
        self.ninputs() == 1 && self.noutputs() == 1
    }

    /// `C (sI - A)^{-1} B + D`.
    pub fn eval(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.nstates();
        let d = self.d.map(|v| Complex64::new(v, 0.0));
        if n == 0 {
            return Ok(d);
        }
        let mut si_a = self.a.map(|v| Complex64::new(-v, 0.0));
        for i in 0..n {
            si_a[(i, i)] += s;
        }
        let b = self.b.map(|v| Complex64::new(v, 0.0));
        let c = self.c.map(|v| Complex64::new(v, 0.0));
        let x = si_a.lu().solve(&b).ok_or(Error::AxisPole { omega: s.im })?;
        Ok(c * x + d)
    }

    pub fn freq_response(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        self.eval(Complex64::new(0.0, omega))
    }

    /// Largest singular value of the frequency response at `omega`.
    pub fn sigma_max(&self, omega: f64) -> Result<f64> {
        Ok(linalg::norm2_complex(&self.freq_response(omega)?))
    }
}

/// Stability classes of a state matrix.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    /// `A` Hurwitz.
    pub f_stable: bool,
    /// `-A` Hurwitz.
    pub b_stable: bool,
    /// No eigenvalue of `A` on the imaginary axis.
    pub l2_double_axis_bounded: bool,
    pub eigenvalues: Vec<Complex64>,
}

pub fn stability_classify(p: &StateSpace) -> Result<StabilityReport> {
    classify_matrix(&p.a)
}

pub(crate) fn classify_matrix(a: &DMatrix<f64>) -> Result<StabilityReport> {
    let eigenvalues = linalg::eigenvalues(a)?;
    let on_axis = |z: &Complex64| linalg::on_axis(*z, AXIS_TOL);
    let bounded = !eigenvalues.iter().any(on_axis);
    Ok(StabilityReport {
        f_stable: bounded && eigenvalues.iter().all(|z| z.re < 0.0),
        b_stable: bounded && eigenvalues.iter().all(|z| z.re > 0.0),
        l2_double_axis_bounded: bounded,
        eigenvalues,
    })
}

/// Time conjugation: the same equations run with the time axis flipped,
/// `(A, B, C, D) -> (-A, -B, C, D)`. The transfer function becomes `P(-s)`.
pub fn time_conjugate(p: &StateSpace) -> StateSpace {
    StateSpace {
        a: -&p.a,
        b: -&p.b,
        c: p.c.clone(),
        d: p.d.clone(),
        x0: p.x0.clone(),
    }
}

/// Controllable canonical realization of a proper SISO transfer function,
/// after cancelling common factors.
pub fn realize(tf: &TransferFunction) -> Result<StateSpace> {
    if !tf.is_proper() {
        return Err(Error::ImproperTransferFunction);
    }
    let tf = tf.reduced(COPRIME_TOL)?;
    let n = tf.den.degree();
    let (q, r) = tf.num.div_rem(&tf.den)?;
    let d = q.coeff(0);
    if n == 0 {
        return Ok(StateSpace::gain(d));
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = -tf.den.coeff(j);
    }
    let mut b = DMatrix::zeros(n, 1);
    b[(n - 1, 0)] = 1.0;
    let c = DMatrix::from_fn(1, n, |_, j| r.coeff(j));
    StateSpace::new(a, b, c, DMatrix::from_element(1, 1, d))
}

fn char_poly(a: &DMatrix<f64>) -> Result<Polynomial> {
    Ok(Polynomial::from_roots(&linalg::eigenvalues(a)?, 1.0))
}

/// Coprime transfer function with monic denominator of a SISO system.
///
/// Uses `det(sI - A + BC) = det(sI - A) (1 + C (sI - A)^{-1} B)`.
pub fn ss_to_tf(p: &StateSpace) -> Result<TransferFunction> {
    if !p.is_siso() {
        return Err(Error::SisoOnly);
    }
    let d = p.d[(0, 0)];
    if p.nstates() == 0 {
        return Ok(TransferFunction::constant(d));
    }
    let den = char_poly(&p.a)?;
    let shifted = char_poly(&(&p.a - &p.b * &p.c))?;
    let scale = den.max_abs_coeff().max(shifted.max_abs_coeff());
    let strictly = (&shifted - &den).chopped(1e-13 * scale);
    let num = &strictly + &den.scale(d);
    TransferFunction::new(num, den)?.reduced(COPRIME_TOL)
}

/// Controllable and observable, judged by the orthogonal Krylov staircase.
pub fn minimality_check(p: &StateSpace) -> bool {
    let n = p.nstates();
    linalg::reachable_dimension(&p.a, &p.b, RANK_TOL) == n
        && linalg::reachable_dimension(&p.a.transpose(), &p.c.transpose(), RANK_TOL) == n
}

/// The closed-loop map `(u0, y0) -> (u1, y1)`,
/// `H = [I; P] (I - C P)^{-1} [I, -C]`, so that `u1 = u0 + C (y1 - y0)` and
/// `y1 = P u1`.
#[derive(Clone, Debug)]
pub struct ClosedLoopMap {
    /// Inputs `[u0; y0]`, outputs `[u1; y1]`, states `[x_P; x_C]`.
    /// `None` when the loop is ill-posed.
    pub realization: Option<StateSpace>,
    pub well_posed: bool,
    pub internally_f_stable: bool,
}

pub fn closed_loop_map(p: &StateSpace, c: &StateSpace) -> Result<ClosedLoopMap> {
    let m = p.ninputs();
    let q = p.noutputs();
    if c.ninputs() != q || c.noutputs() != m {
        return Err(Error::Dimension(
            "controller must map plant outputs to plant inputs",
        ));
    }
    let np = p.nstates();
    let nc = c.nstates();
    let n = np + nc;
    let e_inv = DMatrix::<f64>::identity(m, m) - &c.d * &p.d;
    let e = match linalg::inverse(&e_inv) {
        Some(e) if e.iter().all(|v| v.is_finite()) => e,
        _ => {
            return Ok(ClosedLoopMap {
                realization: None,
                well_posed: false,
                internally_f_stable: false,
            })
        }
    };
    // u1 = Ku x + Lu w
    let mut kx = DMatrix::zeros(m, n);
    kx.view_mut((0, 0), (m, np)).copy_from(&(&c.d * &p.c));
    kx.view_mut((0, np), (m, nc)).copy_from(&c.c);
    let ku = &e * kx;
    let mut lw = DMatrix::zeros(m, m + q);
    lw.view_mut((0, 0), (m, m))
        .copy_from(&DMatrix::identity(m, m));
    lw.view_mut((0, m), (m, q)).copy_from(&(-&c.d));
    let lu = &e * lw;
    // y1 = Ky x + Ly w
    let mut cp = DMatrix::zeros(q, n);
    cp.view_mut((0, 0), (q, np)).copy_from(&p.c);
    let ky = cp + &p.d * &ku;
    let ly = &p.d * &lu;
    // e = y1 - y0
    let mut sel_y0 = DMatrix::zeros(q, m + q);
    sel_y0
        .view_mut((0, m), (q, q))
        .copy_from(&DMatrix::identity(q, q));
    let le = &ly - sel_y0;

    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (np, np)).copy_from(&p.a);
    a.view_mut((np, np), (nc, nc)).copy_from(&c.a);
    let mut bu = DMatrix::zeros(n, m);
    bu.view_mut((0, 0), (np, m)).copy_from(&p.b);
    let mut be = DMatrix::zeros(n, q);
    be.view_mut((np, 0), (nc, q)).copy_from(&c.b);
    let a = a + &bu * &ku + &be * &ky;
    let b = &bu * &lu + &be * &le;
    let mut cc = DMatrix::zeros(m + q, n);
    cc.view_mut((0, 0), (m, n)).copy_from(&ku);
    cc.view_mut((m, 0), (q, n)).copy_from(&ky);
    let mut dd = DMatrix::zeros(m + q, m + q);
    dd.view_mut((0, 0), (m, m + q)).copy_from(&lu);
    dd.view_mut((m, 0), (q, m + q)).copy_from(&ly);
    let realization = StateSpace::new(a, b, cc, dd)?;
    let internally_f_stable = stability_classify(&realization)?.f_stable;
    Ok(ClosedLoopMap {
        realization: Some(realization),
        well_posed: true,
        internally_f_stable,
    })
}

/// Series connection: `first` drives `second`, overall `second * first`.
pub fn series(first: &StateSpace, second: &StateSpace) -> Result<StateSpace> {
    if first.noutputs() != second.ninputs() {
        return Err(Error::Dimension("series connection"));
    }
    let n1 = first.nstates();
    let n2 = second.nstates();
    let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
    a.view_mut((0, 0), (n1, n1)).copy_from(&first.a);
    a.view_mut((n1, 0), (n2, n1))
        .copy_from(&(&second.b * &first.c));
    a.view_mut((n1, n1), (n2, n2)).copy_from(&second.a);
    let mut b = DMatrix::zeros(n1 + n2, first.ninputs());
    b.view_mut((0, 0), (n1, first.ninputs()))
        .copy_from(&first.b);
    b.view_mut((n1, 0), (n2, first.ninputs()))
        .copy_from(&(&second.b * &first.d));
    let mut c = DMatrix::zeros(second.noutputs(), n1 + n2);
    c.view_mut((0, 0), (second.noutputs(), n1))
        .copy_from(&(&second.d * &first.c));
    c.view_mut((0, n1), (second.noutputs(), n2))
        .copy_from(&second.c);
    StateSpace::new(a, b, c, &second.d * &first.d)
}

/// The single-track bicycle model from steering angle to tilt angle,
/// `alpha V (s + beta V) / (s^2 - gamma)`, in controllable canonical form
/// (no cancellation is performed, so the hidden mode at `beta V = sqrt(gamma)`
/// is kept).
pub fn bicycle(alpha: f64, beta: f64, gamma: f64, speed: f64) -> StateSpace {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, gamma, 0.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
    let gain = alpha * speed;
    let c = DMatrix::from_row_slice(1, 2, &[gain * (beta * speed), gain]);
    StateSpace {
        a,
        b,
        c,
        d: DMatrix::zeros(1, 1),
        x0: DVector::zeros(2),
    }
}
