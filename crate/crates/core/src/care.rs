//! Lyapunov and algebraic Riccati solvers, and the Riccati differential
//! equation of the finite-horizon regulator.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;

use crate::linalg::{self, symmetrized};
use crate::{Error, Result};

/// Relative distance from the imaginary axis below which a Hamiltonian
/// eigenvalue is treated as lying on it.
pub const HAMILTONIAN_AXIS_TOL: f64 = 1e-8;

/// Solve `F' X + X F + Q = 0`.
pub fn solve_lyapunov(f: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = f.nrows();
    if f.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension(
            "Lyapunov operands must be square and equal size",
        ));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eig = linalg::eigenvalues(f)?;
    let scale = 1.0 + eig.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    for &li in &eig {
        for &lj in &eig {
            if (li + lj).norm() <= 1e-10 * scale {
                return Err(Error::SingularSylvester);
            }
        }
    }
    let x = linalg::lyapunov_kron(f, q).ok_or(Error::SingularSylvester)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSylvester);
    }
    if (q - q.transpose()).norm() <= 1e-14 * (1.0 + q.norm()) {
        Ok(symmetrized(x))
    } else {
        Ok(x)
    }
}

/// Which extremal solution of an algebraic Riccati equation to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremal {
    /// `A - G S` Hurwitz.
    Stabilizing,
    /// `-(A - G S)` Hurwitz.
    Antistabilizing,
}

#[derive(Clone, Debug)]
pub struct AreSolution {
    pub s: DMatrix<f64>,
    /// Frobenius norm of `A'S + SA - SGS + Q`.
    pub residual: f64,
    /// Eigenvalues of `A - G S`.
    pub closed_loop_eigs: Vec<Complex64>,
}

fn are_residual(a: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>, s: &DMatrix<f64>) -> f64 {
    (a.transpose() * s + s * a - s * g * s + q).norm()
}

/// Extremal solution of `A'S + SA - S G S + Q = 0` for symmetric `G`, `Q`.
///
/// The stable (or antistable) invariant subspace `[I; S]` of the Hamiltonian
/// `[[A, -G], [-Q, -A']]` is read off the matrix sign function, then polished
/// by Newton steps on the Riccati equation.
pub fn solve_are(
    a: &DMatrix<f64>,
    g: &DMatrix<f64>,
    q: &DMatrix<f64>,
    which: Extremal,
) -> Result<AreSolution> {
    let n = a.nrows();
    if a.ncols() != n || g.shape() != (n, n) || q.shape() != (n, n) {
        return Err(Error::Dimension(
            "Riccati operands must be square and equal size",
        ));
    }
    if n == 0 {
        return Ok(AreSolution {
            s: DMatrix::zeros(0, 0),
            residual: 0.0,
            closed_loop_eigs: Vec::new(),
        });
    }
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-g));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    if linalg::eigenvalues(&h)?
        .iter()
        .any(|z| linalg::on_axis(*z, HAMILTONIAN_AXIS_TOL))
    {
        return Err(Error::NoExtremalSolution);
    }
    let w = linalg::sign_function(&h)?;
    // stable subspace: (W + I) [I; S] = 0, antistable: (W - I) [I; S] = 0
    let shift = match which {
        Extremal::Stabilizing => 1.0,
        Extremal::Antistabilizing => -1.0,
    };
    let eye = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n))
        .copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n))
        .copy_from(&(w.view((n, n), (n, n)) + &eye * shift));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(w.view((0, 0), (n, n)) + &eye * shift)));
    rhs.view_mut((n, 0), (n, n))
        .copy_from(&(-w.view((n, 0), (n, n))));
    let svd = SVD::new(lhs, true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin.is_nan() || smin <= 1e-10 * smax {
        return Err(Error::NoExtremalSolution);
    }
    let mut s = symmetrized(
        svd.solve(&rhs, 0.0)
            .map_err(|_| Error::NoExtremalSolution)?,
    );
    let mut residual = are_residual(a, g, q, &s);
    for _ in 0..3 {
        let f = a - g * &s;
        let rhs = q + &s * g * &s;
        let next = match solve_lyapunov(&f, &rhs) {
            Ok(next) => next,
            Err(_) => break,
        };
        let r = are_residual(a, g, q, &next);
        if r < residual {
            s = next;
            residual = r;
        } else {
            break;
        }
    }
    let closed_loop_eigs = linalg::eigenvalues(&(a - g * &s))?;
    let side_ok = closed_loop_eigs.iter().all(|z| match which {
        Extremal::Stabilizing => z.re < 0.0,
        Extremal::Antistabilizing => z.re > 0.0,
    });
    let scale = 1.0 + q.norm() + 2.0 * a.norm() * s.norm() + g.norm() * s.norm() * s.norm();
    if !side_ok || residual.is_nan() || residual > 1e-6 * scale {
        return Err(Error::NoExtremalSolution);
    }
    Ok(AreSolution {
        s,
        residual,
        closed_loop_eigs,
    })
}

fn weights(
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if r.nrows() != b.ncols() || r.ncols() != b.ncols() {
        return Err(Error::Dimension("R must be inputs x inputs"));
    }
    if q.nrows() != c.nrows() || q.ncols() != c.nrows() {
        return Err(Error::Dimension("Q must be outputs x outputs"));
    }
    let chol = r
        .clone()
        .cholesky()
        .ok_or(Error::InvalidArgument("R must be positive definite"))?;
    let g = symmetrized(b * chol.inverse() * b.transpose());
    let qn = symmetrized(c.transpose() * q * c);
    Ok((g, qn))
}

/// The two extremal solutions of `A'S + SA - S B R^{-1} B' S + C'QC = 0`.
#[derive(Clone, Debug)]
pub struct RiccatiPair {
    /// Stabilizing solution; positive definite for minimal `(A, B, C)`.
    pub s_plus: DMatrix<f64>,
    /// Antistabilizing solution; negative definite for minimal `(A, B, C)`.
    pub s_minus: DMatrix<f64>,
    pub residual_plus: f64,
    pub residual_minus: f64,
    pub closed_loop_eigs_plus: Vec<Complex64>,
    pub closed_loop_eigs_minus: Vec<Complex64>,
}

pub fn care_extremal(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<RiccatiPair> {
    let (g, qn) = weights(b, c, q, r)?;
    let plus = solve_are(a, &g, &qn, Extremal::Stabilizing)?;
    let minus = solve_are(a, &g, &qn, Extremal::Antistabilizing)?;
    Ok(RiccatiPair {
        s_plus: plus.s,
        s_minus: minus.s,
        residual_plus: plus.residual,
        residual_minus: minus.residual,
        closed_loop_eigs_plus: plus.closed_loop_eigs,
        closed_loop_eigs_minus: minus.closed_loop_eigs,
    })
}

/// One extremal solution of the regulator Riccati equation.
pub fn care_one(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    which: Extremal,
) -> Result<AreSolution> {
    let (g, qn) = weights(b, c, q, r)?;
    solve_are(a, &g, &qn, which)
}

const ODE_INITIAL_STEPS: usize = 4096;
const ODE_MAX_STEPS: usize = 1 << 20;
const ODE_AGREEMENT: f64 = 1e-8;
const BLOW_UP: f64 = 1e12;

/// `-dS/dt = SA + A'S - SGS + C'QC` with `G = B R^{-1} B'`.
#[derive(Clone, Debug)]
pub struct RiccatiOde {
    a: DMatrix<f64>,
    g: DMatrix<f64>,
    qn: DMatrix<f64>,
}

/// Samples of `S(t)` between the terminal time and an evaluation time.
#[derive(Clone, Debug)]
pub struct RiccatiTrajectory {
    pub grid: Vec<f64>,
    pub s_of_t: Vec<DMatrix<f64>>,
    pub terminal: (f64, DMatrix<f64>),
}

impl RiccatiOde {
    pub fn new(
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        c: &DMatrix<f64>,
        q: &DMatrix<f64>,
        r: &DMatrix<f64>,
    ) -> Result<Self> {
        if a.nrows() != a.ncols() || b.nrows() != a.nrows() || c.ncols() != a.nrows() {
            return Err(Error::Dimension("A, B, C do not fit together"));
        }
        let (g, qn) = weights(b, c, q, r)?;
        Ok(RiccatiOde {
            a: a.clone(),
            g,
            qn,
        })
    }

    /// Right-hand side `dS/dt`.
    pub fn derivative(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        -(s * &self.a + self.a.transpose() * s - s * &self.g * s + &self.qn)
    }

    fn rk4(&self, from: f64, value: &DMatrix<f64>, to: f64, steps: usize) -> Result<DMatrix<f64>> {
        let h = (to - from) / steps as f64;
        let mut s = value.clone();
        for k in 0..steps {
            let k1 = self.derivative(&s);
            let k2 = self.derivative(&(&s + &k1 * (h / 2.0)));
            let k3 = self.derivative(&(&s + &k2 * (h / 2.0)));
            let k4 = self.derivative(&(&s + &k3 * h));
            s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            linalg::symmetrize(&mut s);
            let size = s.norm();
            if !size.is_finite() || size > BLOW_UP {
                return Err(Error::RiccatiBlowUp {
                    time: from + h * (k + 1) as f64,
                });
            }
        }
        Ok(s)
    }

    /// `S(eval_time)` from `S(terminal_time) = terminal_value`, integrating in
    /// whichever time direction separates the two instants.
    pub fn solve(
        &self,
        terminal_time: f64,
        terminal_value: &DMatrix<f64>,
        eval_time: f64,
    ) -> Result<DMatrix<f64>> {
        self.solve_with_estimate(terminal_time, terminal_value, eval_time)
            .map(|(s, _)| s)
    }

    /// As [`solve`](Self::solve), also returning the Richardson estimate of
    /// the remaining error.
    pub fn solve_with_estimate(
        &self,
        terminal_time: f64,
        terminal_value: &DMatrix<f64>,
        eval_time: f64,
    ) -> Result<(DMatrix<f64>, f64)> {
        if !terminal_time.is_finite() || !eval_time.is_finite() {
            return Err(Error::InvalidArgument("times must be finite"));
        }
        let n = self.a.nrows();
        if terminal_value.shape() != (n, n) {
            return Err(Error::Dimension("terminal value must be n x n"));
        }
        let h = symmetrized(terminal_value.clone());
        if terminal_time == eval_time {
            return Ok((h, 0.0));
        }
        let mut steps = ODE_INITIAL_STEPS;
        let mut coarse = self.rk4(terminal_time, &h, eval_time, steps)?;
        while steps < ODE_MAX_STEPS {
            steps *= 2;
            let fine = self.rk4(terminal_time, &h, eval_time, steps)?;
            let diff = (&fine - &coarse).norm();
            if diff < ODE_AGREEMENT * fine.norm().max(1.0) {
                return Ok((fine, diff / 15.0));
            }
            coarse = fine;
        }
        Err(Error::RiccatiAccuracy)
    }

    /// `samples + 1` evenly spaced values of `S` from the terminal time to
    /// `eval_time`.
    pub fn trajectory(
        &self,
        terminal_time: f64,
        terminal_value: &DMatrix<f64>,
        eval_time: f64,
        samples: usize,
    ) -> Result<RiccatiTrajectory> {
        let samples = samples.max(1);
        let mut grid = Vec::with_capacity(samples + 1);
        let mut s_of_t = Vec::with_capacity(samples + 1);
        let mut current = symmetrized(terminal_value.clone());
        let mut t = terminal_time;
        grid.push(t);
        s_of_t.push(current.clone());
        for k in 1..=samples {
            let next_t = terminal_time + (eval_time - terminal_time) * k as f64 / samples as f64;
            current = self.solve(t, &current, next_t)?;
            t = next_t;
            grid.push(t);
            s_of_t.push(current.clone());
        }
        Ok(RiccatiTrajectory {
            grid,
            s_of_t,
            terminal: (terminal_time, terminal_value.clone()),
        })
    }
}

/// `S(eval_time)` for the Riccati differential equation with
/// `S(terminal_time) = terminal_value`.
#[allow(clippy::too_many_arguments)]
pub fn riccati_ode_solve(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    terminal_time: f64,
    terminal_value: &DMatrix<f64>,
    eval_time: f64,
) -> Result<DMatrix<f64>> {
    RiccatiOde::new(a, b, c, q, r)?.solve(terminal_time, terminal_value, eval_time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m1(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_lyapunov() {
        assert_relative_eq!(solve_lyapunov(&m1(-1.0), &m1(2.0)).unwrap()[(0, 0)], 1.0);
        let x = solve_lyapunov(
            &(-DMatrix::identity(2, 2)),
            &(DMatrix::identity(2, 2) * 2.0),
        )
        .unwrap();
        assert_relative_eq!(x, DMatrix::identity(2, 2), epsilon = 1e-14);
    }

    #[test]
    fn companion_lyapunov_against_symmetric_unknowns() {
        let f = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -3.0]);
        let q = DMatrix::identity(2, 2);
        // unknowns (x11, x12, x22); entries (1,1), (1,2), (2,2) of F'X + XF = -Q
        let sys = nalgebra::Matrix3::new(0.0, -4.0, 0.0, 1.0, -3.0, -2.0, 0.0, 2.0, -6.0);
        let rhs = nalgebra::Vector3::new(-1.0, 0.0, -1.0);
        let v = sys.lu().solve(&rhs).unwrap();
        assert_relative_eq!(v[0], 1.25, epsilon = 1e-14);
        assert_relative_eq!(v[1], 0.25, epsilon = 1e-14);
        assert_relative_eq!(v[2], 0.25, epsilon = 1e-14);
        let x = solve_lyapunov(&f, &q).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[v[0], v[1], v[1], v[2]]);
        assert_relative_eq!(x, want, epsilon = 1e-12);
        let res = (f.transpose() * &x + &x * &f + &q).norm();
        assert!(res <= 1e-10 * (1.0 + q.norm()));
    }

    #[test]
    fn lyapunov_spectrum_condition() {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(
            solve_lyapunov(&f, &DMatrix::identity(2, 2)).unwrap_err(),
            Error::SingularSylvester
        );
    }

    fn scalar_pair(a: f64, b: f64) -> RiccatiPair {
        care_extremal(&m1(a), &m1(b), &m1(1.0), &m1(1.0), &m1(1.0)).unwrap()
    }

    #[test]
    fn scalar_extremal_solutions() {
        let p = scalar_pair(1.0, 1.0);
        assert_relative_eq!(p.s_plus[(0, 0)], 1.0 + 2f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(p.s_minus[(0, 0)], 1.0 - 2f64.sqrt(), max_relative = 1e-12);
        assert!(p.closed_loop_eigs_plus[0].re < 0.0);
        assert!(p.closed_loop_eigs_minus[0].re > 0.0);

        let eps = 0.1_f64;
        let p = scalar_pair(1.0, eps);
        let root = (1.0 + eps * eps).sqrt();
        assert_relative_eq!(
            p.s_plus[(0, 0)],
            (1.0 + root) / (eps * eps),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            p.s_minus[(0, 0)],
            (1.0 - root) / (eps * eps),
            max_relative = 1e-10
        );
        assert_relative_eq!(p.s_plus[(0, 0)], 200.4988, epsilon = 1e-4);
        assert_relative_eq!(p.s_minus[(0, 0)], -0.49875, epsilon = 1e-5);

        let p = scalar_pair(-1.0, 1.0);
        assert_relative_eq!(p.s_plus[(0, 0)], -1.0 + 2f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(p.s_minus[(0, 0)], -1.0 - 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn axis_hamiltonian_has_no_extremal_solution() {
        // uncontrollable oscillator
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let b = DMatrix::zeros(2, 1);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let e = care_extremal(&a, &b, &c, &m1(1.0), &m1(1.0)).unwrap_err();
        assert_eq!(e, Error::NoExtremalSolution);
    }

    #[test]
    fn conjugated_plus_is_negated_minus() {
        let a = DMatrix::from_row_slice(2, 2, &[0.3, 1.0, -2.0, -0.7]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.5]);
        let p = care_extremal(&a, &b, &c, &m1(1.0), &m1(2.0)).unwrap();
        let j = care_extremal(&(-&a), &(-&b), &c, &m1(1.0), &m1(2.0)).unwrap();
        assert_relative_eq!(j.s_plus, -&p.s_minus, max_relative = 1e-8);
        let diff = &p.s_plus - &p.s_minus;
        assert!(linalg::symmetric_eigenvalues(&diff)[0] >= -1e-10);
    }

    fn unit_ode() -> RiccatiOde {
        RiccatiOde::new(&m1(1.0), &m1(1.0), &m1(1.0), &m1(1.0), &m1(1.0)).unwrap()
    }

    /// Closed form for `dS/dtau = -(S - a)(S - b)` with `a, b = 1 +- sqrt 2`,
    /// `tau` measured away from the terminal instant in the direction the
    /// equation is integrated. `sign = +1` for backward-in-t integration.
    fn scalar_closed_form(s0: f64, elapsed: f64, sign: f64) -> f64 {
        let a = 1.0 + 2f64.sqrt();
        let b = 1.0 - 2f64.sqrt();
        let k = (s0 - a) / (s0 - b) * (-sign * (a - b) * elapsed).exp();
        (a - b * k) / (1.0 - k)
    }

    #[test]
    fn finite_horizon_values() {
        let ode = unit_ode();
        let fwd = ode.solve(1.0, &m1(10.0), 0.0).unwrap()[(0, 0)];
        assert_relative_eq!(
            fwd,
            scalar_closed_form(10.0, 1.0, 1.0),
            max_relative = 1e-10
        );
        assert!((fwd - 2.5415).abs() < 5e-5);
        let bwd = ode.solve(-1.0, &m1(-10.0), 0.0).unwrap()[(0, 0)];
        assert_relative_eq!(
            bwd,
            scalar_closed_form(-10.0, 1.0, -1.0),
            max_relative = 1e-10
        );
        assert!((-bwd - 0.5495).abs() < 5e-5);
    }

    #[test]
    fn equilibrium_is_constant() {
        let fixed = 1.0 + 2f64.sqrt();
        let s = unit_ode().solve(1.0, &m1(fixed), 0.0).unwrap()[(0, 0)];
        assert_relative_eq!(s, fixed, max_relative = 1e-12);
    }

    #[test]
    fn long_horizon_approaches_stabilizing_solution() {
        let s = unit_ode().solve(30.0, &m1(0.0), 0.0).unwrap()[(0, 0)];
        assert!((s - (1.0 + 2f64.sqrt())).abs() < 1e-4);
    }

    #[test]
    fn finite_escape_is_reported() {
        // backward in time from a large positive value the scalar equation escapes
        let e = unit_ode().solve(-1.0, &m1(10.0), 0.0).unwrap_err();
        assert!(matches!(e, Error::RiccatiBlowUp { .. }));
    }

    #[test]
    fn trajectory_endpoints() {
        let ode = unit_ode();
        let tr = ode.trajectory(1.0, &m1(10.0), 0.0, 4).unwrap();
        assert_eq!(tr.grid.len(), 5);
        assert_relative_eq!(
            tr.s_of_t[4][(0, 0)],
            ode.solve(1.0, &m1(10.0), 0.0).unwrap()[(0, 0)],
            max_relative = 1e-9
        );
        // the ODE residual at interior samples, by central differences
        let h = 1e-4;
        let t = tr.grid[2];
        let sp = ode.solve(1.0, &m1(10.0), t + h).unwrap();
        let sm = ode.solve(1.0, &m1(10.0), t - h).unwrap();
        let fd = (&sp - &sm) / (2.0 * h);
        assert!((fd - ode.derivative(&tr.s_of_t[2])).norm() < 1e-6);
    }
}
