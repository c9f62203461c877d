use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Cholesky factorization of a symmetric positive-definite matrix after
/// symmetric diagonal (Jacobi) scaling. Falls back to a small ridge on the
/// unscaled diagonal when the first factorization fails.
pub(crate) struct SpdFactor {
    scale: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    pub ridge_used: bool,
}

impl SpdFactor {
    pub fn new(h: &DMatrix<f64>) -> Result<Self> {
        let dim = h.nrows();
        match Self::factor(h.clone()) {
            Some((scale, chol)) => Ok(SpdFactor { scale, chol, ridge_used: false }),
            None => {
                let ridge = 1e-12 * h.trace() / dim.max(1) as f64;
                let mut shifted = h.clone();
                for i in 0..dim {
                    shifted[(i, i)] += ridge;
                }
                Self::factor(shifted)
                    .map(|(scale, chol)| SpdFactor { scale, chol, ridge_used: true })
                    .ok_or_else(|| Error::Numerical("Hessian is not positive definite".into()))
            }
        }
    }

    fn factor(mut h: DMatrix<f64>) -> Option<(DVector<f64>, Cholesky<f64, Dyn>)> {
        let dim = h.nrows();
        let diag = h.diagonal();
        if diag.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return None;
        }
        let scale = diag.map(|d| 1.0 / d.sqrt());
        for j in 0..dim {
            for i in 0..dim {
                h[(i, j)] *= scale[i] * scale[j];
            }
        }
        Cholesky::new(h).map(|c| (scale, c))
    }

    /// Solves `H d = r`.
    pub fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        let scaled = r.component_mul(&self.scale);
        self.chol.solve(&scaled).component_mul(&self.scale)
    }

    /// `√(rᵀ H⁻¹ r)`, computed as the norm of a triangular solve so it is
    /// never the square root of a rounding-negative number.
    pub fn inverse_norm(&self, r: &DVector<f64>) -> f64 {
        let scaled = r.component_mul(&self.scale);
        let w = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&scaled)
            .expect("Cholesky factor has a positive diagonal");
        w.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_badly_scaled_spd_system() {
        let h = DMatrix::from_row_slice(3, 3, &[1e12, 1.0, 0.0, 1.0, 2.0, 1e-4, 0.0, 1e-4, 1e-6]);
        let f = SpdFactor::new(&h).unwrap();
        let r = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let d = f.solve(&r);
        let res = (&h * &d - &r).norm() / r.norm();
        assert!(res < 1e-10, "{res}");
        assert!((f.inverse_norm(&r) - r.dot(&d).sqrt()).abs() < 1e-8 * r.dot(&d).sqrt());
    }

    #[test]
    fn rejects_indefinite() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(SpdFactor::new(&h).is_err());
    }
}
