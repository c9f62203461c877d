//! Reference computations for testing the solver: a damped Newton minimizer,
//! Sinkhorn and Osborne iterations, finite-difference checks, a
//! support-function check of facet lists, and high-precision evaluation.
//!
//! Everything here works on plain matrices (exponents as columns) and shares
//! no code with the solver crate.

pub mod generate;
pub mod precise;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("minimum not attained: |x| = {norm:.3e} exceeds {limit:.3e}")]
    NotAttained { norm: f64, limit: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("zero {0} encountered")]
    ZeroLine(&'static str),
    #[error("bad input: {0}")]
    Input(String),
}

pub type OracleResultT<T> = Result<T, OracleError>;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub x_star: DVector<f64>,
    pub f_star: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
}

/// `log Σ q_i e^{⟨ω_i − θ, x⟩}` with gradient and Hessian.
pub fn lse_objective(
    exponents: &DMatrix<f64>,
    q: &DVector<f64>,
    theta: &DVector<f64>,
    x: &DVector<f64>,
) -> (f64, DVector<f64>, DMatrix<f64>) {
    let k = exponents.ncols();
    let n = exponents.nrows();
    let a: Vec<f64> = (0..k).map(|i| q[i].ln() + (exponents.column(i) - theta).dot(x)).collect();
    let top = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = a.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = w.iter().sum();
    let f = top + total.ln();
    let mut mean = DVector::zeros(n);
    for i in 0..k {
        mean += exponents.column(i) * (w[i] / total);
    }
    let mut second = DMatrix::zeros(n, n);
    for i in 0..k {
        let d = exponents.column(i) - &mean;
        second += &d * d.transpose() * (w[i] / total);
    }
    (f, mean - theta, second)
}

/// Orthonormal basis of the column span (modified Gram–Schmidt, run twice).
pub fn orthonormal_span(vectors: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = vectors.nrows();
    let scale = vectors.column_iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for c in vectors.column_iter() {
        let mut v = c.into_owned();
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > tol * scale {
            basis.push(v / norm);
        }
    }
    let mut out = DMatrix::zeros(n, basis.len());
    for (j, b) in basis.iter().enumerate() {
        out.set_column(j, b);
    }
    out
}

/// Damped Newton with backtracking on `F_θ` restricted to
/// `W = span{ω_i − θ}`, stopping at `‖∇F_θ‖₂ ≤ tol`. With `max_norm`, iterates
/// beyond that norm abort with [`OracleError::NotAttained`].
pub fn reference_minimize(
    exponents: &DMatrix<f64>,
    q: &DVector<f64>,
    theta: &DVector<f64>,
    tol: f64,
    max_norm: Option<f64>,
) -> OracleResultT<OracleResult> {
    reference_minimize_from(exponents, q, theta, tol, max_norm, None)
}

/// As [`reference_minimize`], starting from the projection of `start` onto
/// `W` instead of the origin.
pub fn reference_minimize_from(
    exponents: &DMatrix<f64>,
    q: &DVector<f64>,
    theta: &DVector<f64>,
    tol: f64,
    max_norm: Option<f64>,
    start: Option<&DVector<f64>>,
) -> OracleResultT<OracleResult> {
    let mut shifted = exponents.clone();
    for mut c in shifted.column_iter_mut() {
        c -= theta;
    }
    let b = orthonormal_span(&shifted, 1e-10);
    let m = b.ncols();
    let mut y = match start {
        Some(s) => b.tr_mul(s),
        None => DVector::zeros(m),
    };
    let eval = |y: &DVector<f64>| {
        let x = &b * y;
        let (f, g, h) = lse_objective(exponents, q, theta, &x);
        (f, b.tr_mul(&g), b.tr_mul(&h) * &b, g.norm())
    };
    let (mut f, mut g, mut h, mut gnorm) = eval(&y);
    let max_iter = 500;
    for iter in 0..max_iter {
        if gnorm <= tol {
            return Ok(OracleResult { x_star: &b * &y, f_star: f, gradient_norm: gnorm, iterations: iter });
        }
        let d = newton_direction(&h, &g);
        let slope = g.dot(&d);
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &y + &d * s;
            let (ft, gt, ht, gn) = eval(&trial);
            let armijo = ft <= f + 1e-4 * s * slope;
            // Near the minimum f is flat to rounding; accept gradient progress.
            let flat = ft <= f + 1e-13 * f.abs().max(1.0) && gn < gnorm;
            if armijo || flat {
                y = trial;
                f = ft;
                g = gt;
                h = ht;
                gnorm = gn;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            return Err(OracleError::NoConvergence { iterations: iter, residual: gnorm });
        }
        if let Some(limit) = max_norm {
            let norm = y.norm();
            if norm > limit {
                return Err(OracleError::NotAttained { norm, limit });
            }
        }
    }
    Err(OracleError::NoConvergence { iterations: max_iter, residual: gnorm })
}

/// `−H⁻¹g`, falling back to an eigenvalue pseudo-inverse when `H` is not
/// numerically positive definite.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = h.clone().cholesky() {
        return -ch.solve(g);
    }
    let eig = h.clone().symmetric_eigen();
    let top = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let mut d = DVector::zeros(g.len());
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        if *lambda > 1e-14 * top {
            let v = eig.eigenvectors.column(j);
            d -= v * (v.dot(g) / lambda);
        }
    }
    d
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.map(|a| (a - top).exp()).sum::<f64>().ln()
}

/// Log-space Sinkhorn–Knopp. Returns log row and column scalings `(x, y)`
/// with `diag(e^x) M diag(e^y)` having row sums `r` and column sums `c`
/// within `tol` (ℓ₂), plus the iteration count.
pub fn sinkhorn(
    m: &DMatrix<f64>,
    r: &DVector<f64>,
    c: &DVector<f64>,
    max_iter: usize,
    tol: f64,
) -> OracleResultT<(DVector<f64>, DVector<f64>, usize)> {
    let (rows, cols) = m.shape();
    for i in 0..rows {
        if m.row(i).iter().all(|v| *v <= 0.0) {
            return Err(OracleError::ZeroLine("row"));
        }
    }
    for j in 0..cols {
        if m.column(j).iter().all(|v| *v <= 0.0) {
            return Err(OracleError::ZeroLine("column"));
        }
    }
    let logm = m.map(|v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY });
    let mut x = DVector::zeros(rows);
    let mut y = DVector::zeros(cols);
    let residual = |x: &DVector<f64>, y: &DVector<f64>| {
        let n = DMatrix::from_fn(rows, cols, |i, j| (logm[(i, j)] + x[i] + y[j]).exp());
        let rs = n.column_sum() - r;
        let cs = n.row_sum().transpose() - c;
        (rs.norm_squared() + cs.norm_squared()).sqrt()
    };
    for iter in 0..=max_iter {
        let res = residual(&x, &y);
        if res <= tol {
            return Ok((x, y, iter));
        }
        if iter == max_iter {
            return Err(OracleError::NoConvergence { iterations: iter, residual: res });
        }
        for i in 0..rows {
            x[i] = r[i].ln() - log_sum_exp((0..cols).map(|j| logm[(i, j)] + y[j]));
        }
        for j in 0..cols {
            y[j] = c[j].ln() - log_sum_exp((0..rows).map(|i| logm[(i, j)] + x[i]));
        }
    }
    unreachable!()
}

/// Osborne's cyclic balancing. Returns `x` with `diag(e^x) M diag(e^{−x})`
/// having equal off-diagonal row and column sums up to `tol` relative to the
/// total mass, plus the number of sweeps.
pub fn osborne(m: &DMatrix<f64>, max_sweeps: usize, tol: f64) -> OracleResultT<(DVector<f64>, usize)> {
    if !m.is_square() {
        return Err(OracleError::Input("balancing needs a square matrix".into()));
    }
    let n = m.nrows();
    let off = |i: usize, j: usize| if i == j { 0.0 } else { m[(i, j)] };
    let mut x = DVector::zeros(n);
    let imbalance = |x: &DVector<f64>| {
        let b = DMatrix::from_fn(n, n, |i, j| off(i, j) * (x[i] - x[j]).exp());
        let total = b.sum();
        if total == 0.0 {
            return 0.0;
        }
        (b.column_sum() - b.row_sum().transpose()).norm() / total
    };
    for sweep in 0..=max_sweeps {
        let res = imbalance(&x);
        if res <= tol {
            return Ok((x, sweep));
        }
        if sweep == max_sweeps {
            return Err(OracleError::NoConvergence { iterations: sweep, residual: res });
        }
        for i in 0..n {
            let out: f64 = (0..n).map(|j| off(i, j) * (-x[j]).exp()).sum();
            let inc: f64 = (0..n).map(|j| off(j, i) * x[j].exp()).sum();
            match (out > 0.0, inc > 0.0) {
                (true, true) => x[i] = 0.5 * (inc / out).ln(),
                (false, false) => {}
                _ => return Err(OracleError::ZeroLine("row or column in an unbalanceable pattern")),
            }
        }
    }
    unreachable!()
}

/// Largest central-difference error `|fd_j − g_j|` over coordinates,
/// relative to `max(‖g(x)‖∞, 1)`.
pub fn fd_check(
    f: impl Fn(&DVector<f64>) -> f64,
    g: impl Fn(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    h: f64,
) -> f64 {
    let analytic = g(x);
    let scale = analytic.amax().max(1.0);
    let mut worst: f64 = 0.0;
    for j in 0..x.len() {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[j] += h;
        minus[j] -= h;
        let fd = (f(&plus) - f(&minus)) / (2.0 * h);
        worst = worst.max((fd - analytic[j]).abs() / scale);
    }
    worst
}

/// Central-difference check of a Jacobian (e.g. a Hessian against its
/// gradient), relative to `max(max |J|, 1)`.
pub fn fd_check_jacobian(
    g: impl Fn(&DVector<f64>) -> DVector<f64>,
    jac: impl Fn(&DVector<f64>) -> DMatrix<f64>,
    x: &DVector<f64>,
    h: f64,
) -> f64 {
    let analytic = jac(x);
    let scale = analytic.amax().max(1.0);
    let mut worst: f64 = 0.0;
    for j in 0..x.len() {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[j] += h;
        minus[j] -= h;
        let fd = (g(&plus) - g(&minus)) / (2.0 * h);
        for i in 0..fd.len() {
            worst = worst.max((fd[i] - analytic[(i, j)]).abs() / scale);
        }
    }
    worst
}

/// For random unit directions `u` in the direction space of `affspan Ω`,
/// checks that `argmax_i ⟨ω_i, u⟩` lies inside some listed facet support.
pub fn support_consistency(points: &DMatrix<f64>, facet_supports: &[Vec<usize>], samples: usize, seed: u64) -> bool {
    let mut diffs = points.clone();
    let anchor = points.column(0).into_owned();
    for mut c in diffs.column_iter_mut() {
        c -= &anchor;
    }
    let b = orthonormal_span(&diffs, 1e-10);
    if b.ncols() == 0 {
        return false;
    }
    let scale = diffs.column_iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-9 * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let coeffs = DVector::from_fn(b.ncols(), |_, _| rng.gen_range(-1.0..1.0));
        if coeffs.norm() < 1e-3 {
            continue;
        }
        let u = &b * coeffs.normalize();
        let values: Vec<f64> = points.column_iter().map(|w| w.dot(&u)).collect();
        let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let argmax: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= top - tol).collect();
        if !facet_supports.iter().any(|s| argmax.iter().all(|i| s.contains(i))) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, v.len(), v)
    }

    #[test]
    fn symmetric_pair_minimum() {
        let r = reference_minimize(&row(&[-1.0, 1.0]), &DVector::from_element(2, 1.0), &DVector::zeros(1), 1e-12, None)
            .unwrap();
        assert!(r.x_star.norm() < 1e-12);
        assert!((r.f_star - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn binary_entropy() {
        let theta = 0.3f64;
        let r = reference_minimize(
            &row(&[0.0, 1.0]),
            &DVector::from_element(2, 1.0),
            &DVector::from_element(1, theta),
            1e-12,
            None,
        )
        .unwrap();
        let h = -(theta * theta.ln() + (1.0 - theta) * (1.0 - theta).ln());
        assert!((r.f_star - h).abs() < 1e-14);
    }

    #[test]
    fn boundary_shift_is_not_attained() {
        let err = reference_minimize(
            &row(&[0.0, 1.0]),
            &DVector::from_element(2, 1.0),
            &DVector::zeros(1),
            1e-12,
            Some(20.0),
        )
        .unwrap_err();
        assert!(matches!(err, OracleError::NotAttained { .. }));
    }

    #[test]
    fn sinkhorn_on_ones_and_doubly_stochastic() {
        let m = DMatrix::from_element(3, 3, 1.0);
        let u = DVector::from_element(3, 1.0 / 3.0);
        let (x, y, it) = sinkhorn(&m, &u, &u, 100, 1e-14).unwrap();
        assert!(it <= 1);
        assert!((x.add_scalar(-x[0])).amax() < 1e-15 && (y.add_scalar(-y[0])).amax() < 1e-15);
        let ds = DMatrix::from_row_slice(2, 2, &[0.1, 0.4, 0.4, 0.1]);
        let h = DVector::from_element(2, 0.5);
        assert_eq!(sinkhorn(&ds, &h, &h, 100, 1e-14).unwrap().2, 0);
        assert!(sinkhorn(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]), &h, &h, 10, 1e-9).is_err());
    }

    #[test]
    fn osborne_cases() {
        let sym = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        let (x, sweeps) = osborne(&sym, 10, 1e-14).unwrap();
        assert_eq!(sweeps, 0);
        assert!(x.norm() == 0.0);
        let (x, _) = osborne(&DMatrix::from_element(1, 1, 3.0), 10, 1e-14).unwrap();
        assert_eq!(x[0], 0.0);
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 5.0, 2.0, 0.0, 0.5, 0.1, 3.0, 0.0]);
        assert!(osborne(&m, 10_000, 1e-10).is_ok());
    }

    #[test]
    fn fd_on_linear_function() {
        let a = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let err = fd_check(|x| a.dot(x), |_| a.clone(), &DVector::from_vec(vec![0.3, 0.1, -4.0]), 1e-3);
        assert!(err <= 1e-12);
    }

    #[test]
    fn support_consistency_controls() {
        let square = DMatrix::from_row_slice(2, 4, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        let good = vec![vec![0, 1], vec![0, 2], vec![1, 3], vec![2, 3]];
        assert!(support_consistency(&square, &good, 1000, 7));
        let bad = vec![vec![0, 1], vec![0, 2]];
        assert!(!support_consistency(&square, &bad, 1000, 7));
        assert!(support_consistency(&row(&[0.0, 1.0]), &[vec![0], vec![1]], 100, 1));
    }
}
