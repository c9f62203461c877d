//! Arbitrary-precision evaluation of the objective and of the barrier, used to
//! pin the double-precision implementations.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use nalgebra::{DMatrix, DVector};

/// Working precision in bits (about 60 significant decimal digits).
pub const PRECISION: usize = 200;

const RM: RoundingMode = RoundingMode::ToEven;

struct Ctx {
    cc: Consts,
}

impl Ctx {
    fn new() -> Self {
        Ctx { cc: Consts::new().expect("constant cache") }
    }

    fn num(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, PRECISION)
    }

    fn ln(&mut self, v: &BigFloat) -> BigFloat {
        v.ln(PRECISION, RM, &mut self.cc)
    }

    fn exp(&mut self, v: &BigFloat) -> BigFloat {
        v.exp(PRECISION, RM, &mut self.cc)
    }

    fn dot(&self, a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> BigFloat {
        a.zip(b).fold(self.num(0.0), |acc, (x, y)| acc.add(&self.num(x).mul(&self.num(y), PRECISION, RM), PRECISION, RM))
    }

    fn to_f64(&mut self, v: &BigFloat) -> f64 {
        let s = v.format(Radix::Dec, RM, &mut self.cc).expect("formatting");
        s.parse().unwrap_or(f64::NAN)
    }
}

/// `log Σ q_i e^{⟨ω_i − θ, x⟩}` with all arithmetic at [`PRECISION`] bits,
/// rounded to the nearest double at the end.
pub fn log_sum_exp(exponents: &DMatrix<f64>, q: &DVector<f64>, theta: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let mut c = Ctx::new();
    let mut total = c.num(0.0);
    for i in 0..exponents.ncols() {
        let col = exponents.column(i);
        let shifted = (0..x.len()).map(|r| c.num(col[r]).sub(&c.num(theta[r]), PRECISION, RM));
        let mut inner = c.num(0.0);
        for (r, s) in shifted.enumerate() {
            inner = inner.add(&s.mul(&c.num(x[r]), PRECISION, RM), PRECISION, RM);
        }
        let term = c.num(q[i]).mul(&c.exp(&inner), PRECISION, RM);
        total = total.add(&term, PRECISION, RM);
    }
    let out = c.ln(&total);
    c.to_f64(&out)
}

/// The barrier
/// `−Σ log z_i − Σ log(log z_i − ⟨a_i, x⟩ + t − log q_i) − log(T − t)
///  − log(1 − Σ z_i) [− log(R² − ‖x‖²)]`
/// with `a_i = Bᵀ(ω_i − θ)` and `T = log(5k‖q‖₁)`, at [`PRECISION`] bits.
/// Returns `None` at infeasible points.
#[allow(clippy::too_many_arguments)]
pub fn barrier_value(
    exponents: &DMatrix<f64>,
    q: &DVector<f64>,
    theta: &DVector<f64>,
    basis: &DMatrix<f64>,
    x: &DVector<f64>,
    z: &DVector<f64>,
    t: f64,
    radius: Option<f64>,
) -> Option<f64> {
    let mut c = Ctx::new();
    let k = exponents.ncols();
    let n = exponents.nrows();
    let zero = c.num(0.0);
    let one = c.num(1.0);
    let positive = |v: &BigFloat| v.cmp(&zero).is_some_and(|s| s > 0);
    let bt = c.num(t);
    // Bx in ℝⁿ
    let lifted: Vec<BigFloat> = (0..n).map(|r| c.dot(basis.row(r).iter().copied(), x.iter().copied())).collect();
    let mut value = c.num(0.0);
    let mut zsum = c.num(0.0);
    let mut qsum = c.num(0.0);
    for i in 0..k {
        let zi = c.num(z[i]);
        if !positive(&zi) {
            return None;
        }
        zsum = zsum.add(&zi, PRECISION, RM);
        qsum = qsum.add(&c.num(q[i]), PRECISION, RM);
        let mut inner = c.num(0.0);
        for r in 0..n {
            let w = c.num(exponents[(r, i)]).sub(&c.num(theta[r]), PRECISION, RM);
            inner = inner.add(&w.mul(&lifted[r], PRECISION, RM), PRECISION, RM);
        }
        let log_z = c.ln(&zi);
        let log_q = c.ln(&c.num(q[i]));
        let slack = log_z.sub(&inner, PRECISION, RM).add(&bt, PRECISION, RM).sub(&log_q, PRECISION, RM);
        if !positive(&slack) {
            return None;
        }
        let ls = c.ln(&slack);
        value = value.sub(&log_z, PRECISION, RM).sub(&ls, PRECISION, RM);
    }
    let cap = c.ln(&c.num(5.0 * k as f64).mul(&qsum, PRECISION, RM)).sub(&bt, PRECISION, RM);
    let simplex = one.sub(&zsum, PRECISION, RM);
    if !positive(&cap) || !positive(&simplex) {
        return None;
    }
    let (lc, ls) = (c.ln(&cap), c.ln(&simplex));
    value = value.sub(&lc, PRECISION, RM).sub(&ls, PRECISION, RM);
    if let Some(r) = radius {
        let br = c.num(r);
        let norm2 = c.dot(x.iter().copied(), x.iter().copied());
        let ball = br.mul(&br, PRECISION, RM).sub(&norm2, PRECISION, RM);
        if !positive(&ball) {
            return None;
        }
        let lb = c.ln(&ball);
        value = value.sub(&lb, PRECISION, RM);
    }
    Some(c.to_f64(&value))
}
