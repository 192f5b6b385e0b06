//! End-to-end acceptance checks; prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::FRAC_1_SQRT_2;
use std::process::ExitCode;

use arrowgap::sweep::{bicycle_sweep, BicycleParams};
use arrowgap_core::care::{self, RiccatiOde};
use arrowgap_core::delay;
use arrowgap_core::gap::{self, normalized_fraction};
use arrowgap_core::lqr::{lqr_cost_finite, Horizon, LqrProblem};
use arrowgap_core::poly::{Polynomial, TransferFunction};
use arrowgap_core::robust;
use arrowgap_core::statespace::{self, minimality_check, time_conjugate, StateSpace};
use arrowgap_core::Direction;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn m1(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

fn tf(num: &[f64], den: &[f64]) -> TransferFunction {
    TransferFunction::new(
        Polynomial::from_descending(num),
        Polynomial::from_descending(den),
    )
    .unwrap()
}

fn finite_lqr() -> Outcome {
    let cost = |direction| {
        let plant = StateSpace::scalar(1.0, 1.0, 1.0, 0.0)
            .with_x0(DVector::from_element(1, 1.0))
            .unwrap();
        let prob = LqrProblem::new(
            plant,
            m1(1.0),
            m1(1.0),
            Horizon::Finite(1.0),
            Some(m1(10.0)),
            direction,
        )
        .unwrap();
        lqr_cost_finite(&prob)
            .map(|s| s.cost)
            .map_err(|e| e.to_string())
    };
    let (f, b) = (cost(Direction::Forward)?, cost(Direction::Backward)?);
    ensure(
        (f - 2.5415).abs() <= 5e-4 && (b - 0.5495).abs() <= 5e-4,
        format!("forward cost {f:.6} (2.5415), backward cost {b:.6} (0.5495), tol 5e-4"),
    )
}

fn infinite_lqr() -> Outcome {
    let mut worst_rel = 0.0f64;
    let mut expansions = true;
    for eps in [0.01f64, 0.1] {
        let pair = care::care_extremal(&m1(1.0), &m1(eps), &m1(1.0), &m1(1.0), &m1(1.0))
            .map_err(|e| e.to_string())?;
        let (sp, sm) = (pair.s_plus[(0, 0)], pair.s_minus[(0, 0)]);
        let root = (1.0 + eps * eps).sqrt();
        let (cp, cm) = ((1.0 + root) / (eps * eps), (1.0 - root) / (eps * eps));
        worst_rel = worst_rel
            .max(((sp - cp) / cp).abs())
            .max(((sm - cm) / cm).abs());
        expansions &=
            (sp - 2.0 / (eps * eps) - 0.5).abs() <= eps * eps && (sm + 0.5).abs() <= eps * eps;
    }
    ensure(
        worst_rel <= 1e-8 && expansions,
        format!("max rel. error vs closed forms {worst_rel:.2e} (tol 1e-8); expansions within eps^2: {expansions}"),
    )
}

fn nu_gap_examples() -> Outcome {
    let one = normalized_fraction(&tf(&[1.0], &[1.0])).unwrap();
    let integ = normalized_fraction(&tf(&[1.0], &[1.0, 0.0])).unwrap();
    let dbl = normalized_fraction(&tf(&[1.0], &[1.0, 0.0, 0.0])).unwrap();
    let g1 = gap::vgap(&one, &integ).map_err(|e| e.to_string())?;
    let g2 = gap::vgap(&one, &dbl).map_err(|e| e.to_string())?;
    ensure(
        (g1.vgap_f - FRAC_1_SQRT_2).abs() <= 1e-6
            && g1.vgap_b == 1.0
            && g2.vgap_f == 1.0
            && g2.vgap_b == 1.0,
        format!(
            "vgap_f(1,1/s) = {:.9}, vgap_b(1,1/s) = {}, vgap_f(1,1/s^2) = {}, vgap_b(1,1/s^2) = {}",
            g1.vgap_f, g1.vgap_b, g2.vgap_f, g2.vgap_b
        ),
    )
}

fn epsilon_plant() -> Outcome {
    let mut worst = 0.0f64;
    let mut laws = String::new();
    let mut laws_ok = true;
    for eps in [0.02f64, 0.1, 0.5] {
        let k = (1.0 + eps + eps * eps / 2.0).sqrt();
        let bf = (1.0 - (k - 1.0 - eps / 2.0) / (2.0 * k)).sqrt();
        let bb = (1.0 - (k + 1.0 + eps / 2.0) / (2.0 * k)).sqrt();
        let p = StateSpace::scalar(-1.0, eps, 1.0, 1.0);
        let f = robust::b_opt(&p, Direction::Forward)
            .map_err(|e| e.to_string())?
            .b_opt;
        let b = robust::b_opt(&p, Direction::Backward)
            .map_err(|e| e.to_string())?
            .b_opt;
        worst = worst.max((f - bf).abs()).max((b - bb).abs());
        if eps == 0.02 {
            let law_f = ((1.0 - f) - eps * eps / 32.0).abs() / (eps * eps / 32.0);
            let law_b = (b - eps / 4.0).abs() / (eps / 4.0);
            laws_ok = law_f <= 0.1 && law_b <= 0.1;
            laws =
                format!("small-eps laws at 0.02: rel. dev. {law_f:.3} (1-b_f), {law_b:.3} (b_b)");
        }
    }
    ensure(
        worst <= 1e-6 && laws_ok,
        format!("max |b - closed form| {worst:.2e} (tol 1e-6); {laws}"),
    )
}

fn bicycle() -> Outcome {
    let rows = bicycle_sweep(&BicycleParams::default());
    let at15 = rows
        .iter()
        .find(|r| (r.v - 1.5).abs() < 1e-9)
        .map(|r| r.b_opt_b)
        .unwrap_or(f64::NAN);
    let below = rows.iter().all(|r| r.b_opt_b < r.b_opt_f);
    let tail: Vec<f64> = rows
        .iter()
        .filter(|r| r.v >= 2.0 - 1e-9)
        .map(|r| r.b_opt_b)
        .collect();
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);
    let flagged = rows.iter().filter(|r| r.flag.is_some()).count();
    ensure(
        at15 <= 1e-3 && below && increasing && flagged == 0,
        format!(
            "b_opt,b(1.5) = {at15:.2e}; b_b < b_f at all {} speeds: {below}; increasing on [2,10]: {increasing}; flagged rows {flagged}",
            rows.len()
        ),
    )
}

fn delays() -> Outcome {
    let e = |x: arrowgap_core::Error| x.to_string();
    let g = delay::delay_gap(0.1).map_err(e)?;
    let gm = delay::delay_gap(-0.1).map_err(e)?;
    let seq: Vec<f64> = [0.4, 0.2, 0.1, 0.05]
        .iter()
        .map(|&t| delay::delay_gap(t).map(|r| r.delta_l2))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    let decreasing = seq.windows(2).all(|w| w[1] < w[0]);
    let count =
        |t: f64| delay::delay_loop_stability(t, delay::default_radius(t)).map(|r| r.rhp_root_count);
    let (c01, c10, c16) = (
        count(0.1).map_err(e)?,
        count(1.0).map_err(e)?,
        count(1.6).map_err(e)?,
    );
    ensure(
        g.winding == 0
            && g.vgap_f == g.delta_l2
            && g.delta_l2 < 0.1
            && gm.vgap_f == 1.0
            && decreasing
            && c01 == 0
            && c10 == 0
            && c16 >= 2,
        format!(
            "vgap_f(0.1) = {:.6} (winding {}); vgap_f(-0.1) = {}; delta_l2 over 0.4,0.2,0.1,0.05 = {:.4?}; root counts {c01}, {c10}, {c16}",
            g.vgap_f, g.winding, gm.vgap_f, seq
        ),
    )
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_minimal_plant(rng: &mut ChaCha8Rng) -> StateSpace {
    loop {
        let (n, m, p) = (
            rng.gen_range(1..=5),
            rng.gen_range(1..=2),
            rng.gen_range(1..=2),
        );
        let a = random_matrix(rng, n, n) * 1.5;
        let plant = StateSpace::new(
            a,
            random_matrix(rng, n, m),
            random_matrix(rng, p, n),
            DMatrix::zeros(p, m),
        )
        .unwrap();
        if minimality_check(&plant) {
            return plant;
        }
    }
}

fn random_siso(rng: &mut ChaCha8Rng) -> TransferFunction {
    let deg = rng.gen_range(0..=3);
    let mut den: Vec<f64> = (0..deg).map(|_| rng.gen_range(-2.0..2.0)).collect();
    den.push(1.0);
    let num: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-2.0..2.0)).collect();
    TransferFunction::new(Polynomial::new(num), Polynomial::new(den)).unwrap()
}

/// Closed-loop RK4 simulation of the running cost, with `S(t)` interpolated
/// by cubic Hermite polynomials between trajectory samples.
fn simulated_cost(p: &StateSpace, horizon: f64, h: &DMatrix<f64>) -> f64 {
    let ode = RiccatiOde::new(
        &p.a,
        &p.b,
        &p.c,
        &DMatrix::identity(p.noutputs(), p.noutputs()),
        &DMatrix::identity(p.ninputs(), p.ninputs()),
    )
    .unwrap();
    let samples = 40;
    let traj = ode.trajectory(horizon, h, 0.0, samples).unwrap();
    let slopes: Vec<DMatrix<f64>> = traj.s_of_t.iter().map(|s| ode.derivative(s)).collect();
    let ds = horizon / samples as f64;
    let s_at = |t: f64| {
        let u = (horizon - t) / ds;
        let k = (u.floor() as usize).min(samples - 1);
        let w = u - k as f64;
        let (h00, h10, h01, h11) = (
            2.0 * w.powi(3) - 3.0 * w * w + 1.0,
            w.powi(3) - 2.0 * w * w + w,
            -2.0 * w.powi(3) + 3.0 * w * w,
            w.powi(3) - w * w,
        );
        &traj.s_of_t[k] * h00 - &slopes[k] * (h10 * ds) + &traj.s_of_t[k + 1] * h01
            - &slopes[k + 1] * (h11 * ds)
    };
    let n = p.nstates();
    let rhs = |t: f64, z: &DVector<f64>| {
        let x = z.rows(0, n).into_owned();
        let u = -(p.b.transpose() * s_at(t) * &x);
        let y = &p.c * &x;
        let mut dz = DVector::zeros(n + 1);
        dz.rows_mut(0, n).copy_from(&(&p.a * &x + &p.b * &u));
        dz[n] = y.dot(&y) + u.dot(&u);
        dz
    };
    let steps = 2000;
    let dt = horizon / steps as f64;
    let mut z = DVector::zeros(n + 1);
    z.rows_mut(0, n).copy_from(&p.x0);
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = rhs(t, &z);
        let k2 = rhs(t + dt / 2.0, &(&z + &k1 * (dt / 2.0)));
        let k3 = rhs(t + dt / 2.0, &(&z + &k2 * (dt / 2.0)));
        let k4 = rhs(t + dt, &(&z + &k3 * dt));
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    let x = z.rows(0, n).into_owned();
    z[n] + (x.transpose() * h * &x)[(0, 0)]
}

fn property_suites() -> Outcome {
    let e = |x: arrowgap_core::Error| x.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let mut worst_are = 0.0f64;
    let mut sides = true;
    for _ in 0..50 {
        let p = random_minimal_plant(&mut rng);
        let pair = care::care_extremal(
            &p.a,
            &p.b,
            &p.c,
            &DMatrix::identity(p.noutputs(), p.noutputs()),
            &DMatrix::identity(p.ninputs(), p.ninputs()),
        )
        .map_err(e)?;
        let g = &p.b * p.b.transpose();
        let qn = p.c.transpose() * &p.c;
        for (s, side) in [(&pair.s_plus, -1.0), (&pair.s_minus, 1.0)] {
            let scale = 1.0 + 2.0 * p.a.norm() * s.norm() + s.norm().powi(2) * g.norm() + qn.norm();
            let res = (p.a.transpose() * s + s * &p.a - s * &g * s + &qn).norm() / scale;
            worst_are = worst_are.max(res);
            sides &= (&p.a - &g * s)
                .complex_eigenvalues()
                .iter()
                .all(|z| z.re * side > 0.0);
        }
    }

    let mut worst_sim = 0.0f64;
    for _ in 0..3 {
        let p = random_minimal_plant(&mut rng);
        let x0 = DVector::from_fn(p.nstates(), |_, _| rng.gen_range(-1.0..1.0));
        let p = p.with_x0(x0).unwrap();
        let h = DMatrix::identity(p.nstates(), p.nstates()) * 0.5;
        let horizon = rng.gen_range(0.5..2.0);
        let prob = LqrProblem::new(
            p.clone(),
            DMatrix::identity(p.noutputs(), p.noutputs()),
            DMatrix::identity(p.ninputs(), p.ninputs()),
            Horizon::Finite(horizon),
            Some(h.clone()),
            Direction::Forward,
        )
        .map_err(e)?;
        let cost = lqr_cost_finite(&prob).map_err(e)?.cost;
        worst_sim = worst_sim.max((cost - simulated_cost(&p, horizon, &h)).abs() / cost.abs());
    }

    let mut involution = true;
    let mut worst_dual = 0.0f64;
    let mut dual_count = 0;
    while dual_count < 10 {
        let p = random_minimal_plant(&mut rng);
        involution &= time_conjugate(&time_conjugate(&p)) == p;
        let via = robust::b_opt(&p, Direction::Backward).map_err(e)?.b_opt;
        let Ok(ext) = robust::b_opt_backward_extremal(&p) else {
            continue;
        };
        worst_dual = worst_dual.max((via - ext.b_opt).abs());
        dual_count += 1;
    }

    let mut worst_grid = 0.0f64;
    for _ in 0..25 {
        let (t1, t2) = (random_siso(&mut rng), random_siso(&mut rng));
        let (f1, f2) = (
            normalized_fraction(&t1).map_err(e)?,
            normalized_fraction(&t2).map_err(e)?,
        );
        let direct = gap::vgap(&f1, &f2).map_err(e)?;
        let conj = gap::vgap(
            &f1.time_conjugate().map_err(e)?,
            &f2.time_conjugate().map_err(e)?,
        )
        .map_err(e)?;
        worst_dual = worst_dual
            .max((direct.delta_l2 - conj.delta_l2).abs())
            .max((direct.vgap_b - conj.vgap_f).abs())
            .max((direct.vgap_f - conj.vgap_b).abs());
        worst_grid = worst_grid.max((direct.delta_l2 - gap::delta_l2_grid(&t1, &t2)).abs());
    }

    // P = 1/(s-1) stabilized by u = u0 - 2y; P_k = P + 1/k
    let p = tf(&[1.0], &[1.0, -1.0]);
    let pf = normalized_fraction(&p).map_err(e)?;
    let c = StateSpace::gain(-2.0);
    let b = robust::b_margin(&statespace::realize(&p).map_err(e)?, &c)
        .map_err(e)?
        .b;
    let mut gaps = Vec::new();
    let mut continuity = b > 0.0;
    for k in [2.0, 4.0, 8.0, 16.0, 64.0, 256.0] {
        let pk = tf(&[1.0, k - 1.0], &[k, -k]);
        let g = gap::vgap(&normalized_fraction(&pk).map_err(e)?, &pf).map_err(e)?;
        if g.vgap_f < b {
            continuity &= statespace::closed_loop_map(&statespace::realize(&pk).map_err(e)?, &c)
                .map_err(e)?
                .internally_f_stable;
        }
        gaps.push(g.vgap_f);
    }
    continuity &= gaps.windows(2).all(|w| w[1] < w[0]) && gaps.last().is_some_and(|&g| g < 0.01);

    ensure(
        worst_are <= 1e-8
            && sides
            && worst_sim <= 1e-3
            && involution
            && worst_dual <= 1e-9
            && worst_grid <= 1e-6
            && continuity,
        format!(
            "ARE rel. residual {worst_are:.1e}, closed-loop sides {sides}; LQR sim rel. err {worst_sim:.1e}; \
             involution {involution}; duality {worst_dual:.1e}; alg-vs-grid {worst_grid:.1e}; continuity {continuity}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("finite-horizon LQR", finite_lqr),
        ("infinite-horizon LQR", infinite_lqr),
        ("nu-gap examples", nu_gap_examples),
        ("b_opt of 1 + eps/(s+1)", epsilon_plant),
        ("bicycle sweep", bicycle),
        ("delay and predictor", delays),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (status, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} [{status}] {name}: {detail}", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
