//! Dense linear-algebra helpers shared by the solvers.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;
use num_traits::Float;

use crate::{Error, Result};

/// Parlett-Reinsch balancing by powers of two. Returns a matrix similar to `m`.
pub fn balance(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    let radix = 2.0_f64;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / radix {
                cc *= radix;
                rr /= radix;
                f *= radix;
            }
            while cc >= rr * radix {
                cc /= radix;
                rr *= radix;
                f /= radix;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
    a
}

/// Eigenvalues of a real square matrix, sorted by real part then imaginary part.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension("eigenvalues of a non-square matrix"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenvalueFailure);
    }
    let schur = Schur::try_new(balance(m), f64::EPSILON, 1000 * n.max(10))
        .ok_or(Error::EigenvalueFailure)?;
    let mut eig: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect();
    eig.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(
                a.im.partial_cmp(&b.im)
                    .unwrap_or(core::cmp::Ordering::Equal),
            )
    });
    Ok(eig)
}

/// True when `z` lies within `tol` (relative) of the imaginary axis.
pub fn on_axis(z: Complex64, tol: f64) -> bool {
    z.re.abs() <= tol * (1.0 + z.norm())
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn symmetrized(m: DMatrix<f64>) -> DMatrix<f64> {
    let mut m = m;
    symmetrize(&mut m);
    m
}

/// Largest singular value.
pub fn norm2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SVD::new(m.clone(), false, false).singular_values.max()
}

/// Largest singular value of a complex matrix.
pub fn norm2_complex(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    // nalgebra works on its own re-export of `Complex`; same type.
    SVD::new(m.clone(), false, false).singular_values.max()
}

/// Inverse of a square matrix, `None` if singular.
pub fn inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    m.clone().try_inverse()
}

/// Matrix sign function by the scaled Newton iteration.
///
/// Fails if `h` is (numerically) singular or has eigenvalues on the imaginary
/// axis, in which case the iteration stalls.
pub fn sign_function(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = h.nrows();
    let mut z = h.clone();
    let mut last_change = f64::INFINITY;
    for _ in 0..100 {
        let zi = inverse(&z).ok_or(Error::NoExtremalSolution)?;
        let det = z.clone().lu().determinant().abs();
        let c = if det.is_finite() && det > 0.0 {
            Float::powf(det, -1.0 / n as f64)
        } else {
            1.0
        };
        let next = (&z * c + &zi / c) * 0.5;
        let change = (&next - &z).norm();
        let size = next.norm();
        z = next;
        if !size.is_finite() {
            return Err(Error::NoExtremalSolution);
        }
        if change <= 1e-13 * size || (change <= 1e-9 * size && change >= last_change) {
            return Ok(z);
        }
        last_change = change;
    }
    Err(Error::NoExtremalSolution)
}

/// Square root of a symmetric positive semidefinite matrix; negative
/// eigenvalues from rounding are clamped to zero.
pub fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    let eig = SymmetricEigen::new(symmetrized(m.clone()));
    let d = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Float::sqrt(l.max(0.0))),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Eigenvalues of a symmetric matrix in increasing order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = SymmetricEigen::new(symmetrized(m.clone()))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    v
}

/// Largest eigenvalue of `Y X` for `Y` semidefinite (of either sign) and `X`
/// symmetric, computed on the symmetric similarity `|Y|^{1/2} X' |Y|^{1/2}`
/// where both factors are flipped to the positive side together.
pub fn lambda_max_product(y: &DMatrix<f64>, x: &DMatrix<f64>, negative: bool) -> f64 {
    if y.nrows() == 0 {
        return 0.0;
    }
    let (y, x) = if negative {
        (-y, -x)
    } else {
        (y.clone(), x.clone())
    };
    let r = sqrt_psd(&y);
    let m = &r * x * &r;
    symmetric_eigenvalues(&m).last().copied().unwrap_or(0.0)
}

/// Dimension of the smallest `a`-invariant subspace containing the range of
/// `b` (the reachable subspace), by an orthogonalised Krylov staircase.
pub fn reachable_dimension(a: &DMatrix<f64>, b: &DMatrix<f64>, rtol: f64) -> usize {
    let n = a.nrows();
    if n == 0 {
        return 0;
    }
    let scale_a = norm2(a).max(f64::MIN_POSITIVE);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut candidates = b.clone();
    let mut threshold = rtol * norm2(b);
    if threshold == 0.0 {
        return 0;
    }
    while basis.len() < n {
        // project the candidates onto the orthogonal complement, twice
        for _ in 0..2 {
            for q in &basis {
                let coeff = q.transpose() * &candidates;
                candidates -= q * coeff;
            }
        }
        if candidates.ncols() == 0 {
            break;
        }
        let svd = SVD::new(candidates.clone(), true, false);
        let u = match svd.u {
            Some(u) => u,
            None => break,
        };
        let mut fresh = Vec::new();
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > threshold && basis.len() + fresh.len() < n {
                fresh.push(u.column(k).into_owned());
            }
        }
        if fresh.is_empty() {
            break;
        }
        let block = DMatrix::from_columns(&fresh);
        candidates = a * &block;
        threshold = rtol * scale_a;
        basis.extend(fresh);
    }
    basis.len()
}

/// Solve `F' X + X F + Q = 0` through the Kronecker form.
pub fn lyapunov_kron(f: &DMatrix<f64>, q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = f.nrows();
    if n == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    let nn = n * n;
    // vec(F'X + XF) = (I ⊗ F' + F' ⊗ I) vec(X), column-major vec
    let mut k = DMatrix::<f64>::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for l in 0..n {
                // (F'X)_{ij} = sum_l F_{li} X_{lj}
                k[(row, l + j * n)] += f[(l, i)];
                // (XF)_{ij} = sum_l X_{il} F_{lj}
                k[(row, i + l * n)] += f[(l, j)];
            }
        }
    }
    let rhs = DVector::from_iterator(nn, q.iter().map(|v| -v));
    let sol = k.lu().solve(&rhs)?;
    Some(DMatrix::from_column_slice(n, n, sol.as_slice()))
}
