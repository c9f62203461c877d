//! Problem data and stable evaluation of the shifted log-sum-exp objective.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::rational;

/// Relative singular-value cutoff used to decide the dimension of `W`.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Exact form of the exponents and the shift, kept for encoding-length bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalForm {
    pub exponents: Vec<Vec<BigRational>>,
    pub shift: Vec<BigRational>,
}

/// Exponents `ω_1..ω_k ∈ ℝⁿ` (stored as the columns of an `n × k` matrix),
/// positive coefficients `q ∈ ℝᵏ` and a shift `θ ∈ ℝⁿ`.
///
/// Duplicate exponents are kept as separate monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct GpInstance {
    exponents: DMatrix<f64>,
    coefficients: DVector<f64>,
    shift: DVector<f64>,
    rational_form: Option<RationalForm>,
}

impl GpInstance {
    pub fn new(exponents: Vec<Vec<f64>>, coefficients: Vec<f64>, shift: Vec<f64>) -> Result<Self> {
        let k = exponents.len();
        if k == 0 {
            return Err(Error::input("at least one exponent is required"));
        }
        let n = shift.len();
        for (i, w) in exponents.iter().enumerate() {
            if w.len() != n {
                return Err(Error::input(format!(
                    "exponent {i} has dimension {}, shift has dimension {n}",
                    w.len()
                )));
            }
        }
        let matrix = DMatrix::from_fn(n, k, |r, c| exponents[c][r]);
        Self::from_parts(matrix, DVector::from_vec(coefficients), DVector::from_vec(shift))
    }

    /// Builds an instance from an `n × k` exponent matrix (one column per
    /// monomial).
    pub fn from_parts(
        exponents: DMatrix<f64>,
        coefficients: DVector<f64>,
        shift: DVector<f64>,
    ) -> Result<Self> {
        let (n, k) = exponents.shape();
        if k == 0 {
            return Err(Error::input("at least one exponent is required"));
        }
        if coefficients.len() != k {
            return Err(Error::input(format!(
                "{} coefficients for {k} exponents",
                coefficients.len()
            )));
        }
        if shift.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: shift.len() });
        }
        if let Some(q) = coefficients.iter().find(|q| !(q.is_finite() && **q > 0.0)) {
            return Err(Error::input(format!("coefficients must be positive and finite, got {q}")));
        }
        if exponents.iter().chain(shift.iter()).any(|v| !v.is_finite()) {
            return Err(Error::input("exponents and shift must be finite"));
        }
        Ok(GpInstance { exponents, coefficients, shift, rational_form: None })
    }

    /// Builds an instance from exact rational exponents and shift. The float
    /// fields are the nearest doubles.
    pub fn from_rationals(
        exponents: Vec<Vec<BigRational>>,
        coefficients: Vec<f64>,
        shift: Vec<BigRational>,
    ) -> Result<Self> {
        let to_f = |v: &Vec<BigRational>| v.iter().map(rational::to_f64).collect::<Vec<_>>();
        let mut inst = Self::new(exponents.iter().map(to_f).collect(), coefficients, to_f(&shift))?;
        inst.rational_form = Some(RationalForm { exponents, shift });
        Ok(inst)
    }

    /// Attaches the exact rational value of every double (always possible,
    /// since doubles are dyadic rationals).
    pub fn with_exact_rationals(mut self) -> Self {
        if self.rational_form.is_none() {
            let exact = |v: f64| rational::from_f64(v).expect("validated finite");
            let exponents = self
                .exponents
                .column_iter()
                .map(|c| c.iter().copied().map(exact).collect())
                .collect();
            let shift = self.shift.iter().copied().map(exact).collect();
            self.rational_form = Some(RationalForm { exponents, shift });
        }
        self
    }

    /// Same exponents and coefficients with a different shift. Any rational
    /// form is dropped unless `exact_shift` is given.
    pub fn with_shift(&self, shift: DVector<f64>, exact_shift: Option<Vec<BigRational>>) -> Result<Self> {
        let mut inst = Self::from_parts(self.exponents.clone(), self.coefficients.clone(), shift)?;
        if let (Some(rf), Some(s)) = (&self.rational_form, exact_shift) {
            inst.rational_form = Some(RationalForm { exponents: rf.exponents.clone(), shift: s });
        }
        Ok(inst)
    }

    /// Same exponents and shift with different coefficients.
    pub fn with_coefficients(&self, coefficients: DVector<f64>) -> Result<Self> {
        let mut inst =
            Self::from_parts(self.exponents.clone(), coefficients, self.shift.clone())?;
        inst.rational_form = self.rational_form.clone();
        Ok(inst)
    }

    pub fn k(&self) -> usize {
        self.exponents.ncols()
    }

    pub fn n(&self) -> usize {
        self.exponents.nrows()
    }

    /// `n × k` matrix whose columns are the exponents.
    pub fn exponents(&self) -> &DMatrix<f64> {
        &self.exponents
    }

    pub fn exponent(&self, i: usize) -> DVector<f64> {
        self.exponents.column(i).into_owned()
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    pub fn rational_form(&self) -> Option<&RationalForm> {
        self.rational_form.as_ref()
    }

    /// Columns `ω_i − θ`.
    pub fn shifted_exponents(&self) -> DMatrix<f64> {
        let mut d = self.exponents.clone();
        for mut col in d.column_iter_mut() {
            col -= &self.shift;
        }
        d
    }

    pub fn q_l1(&self) -> f64 {
        self.coefficients.sum()
    }

    fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("evaluation point must be finite"));
        }
        Ok(())
    }

    /// Returns `F_θ(x)` and the normalized monomial weights
    /// `p_i = q_i e^{⟨ω_i−θ,x⟩} / Σ_j q_j e^{⟨ω_j−θ,x⟩}`.
    fn log_weights(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let k = self.k();
        let inner = self.exponents.tr_mul(x);
        let shift_dot = self.shift.dot(x);
        let logs = DVector::from_fn(k, |i, _| inner[i] - shift_dot + self.coefficients[i].ln());
        let max = logs.max();
        let mut w = logs.map(|l| (l - max).exp());
        let total = w.sum();
        w /= total;
        (max + total.ln(), w)
    }

    /// `F_θ(x) = log Σ q_i e^{⟨ω_i − θ, x⟩}`, evaluated by subtracting the
    /// largest term before exponentiating.
    pub fn evaluate_objective(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.log_weights(x).0)
    }

    /// `∇F_θ(x) = Σ p_i (ω_i − θ)`; `∇F_θ(x) + θ` is a convex combination of
    /// the exponents.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(x)?;
        let (_, w) = self.log_weights(x);
        Ok(&self.exponents * w - &self.shift)
    }

    /// `∇²F_θ(x)`, the covariance of the exponents under the weights `p`.
    /// Accumulated in centered form so it is positive semidefinite by
    /// construction.
    pub fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let (_, w) = self.log_weights(x);
        let mean = &self.exponents * &w;
        let n = self.n();
        let mut h = DMatrix::zeros(n, n);
        for (i, col) in self.exponents.column_iter().enumerate() {
            let d = col - &mean;
            h.ger(w[i], &d, &d, 1.0);
        }
        Ok(h)
    }

    /// Value, gradient and Hessian from one pass over the monomials.
    pub fn evaluate_all(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        self.check_point(x)?;
        let (f, w) = self.log_weights(x);
        let mean = &self.exponents * &w;
        let n = self.n();
        let mut h = DMatrix::zeros(n, n);
        for (i, col) in self.exponents.column_iter().enumerate() {
            let d = col - &mean;
            h.ger(w[i], &d, &d, 1.0);
        }
        Ok((f, mean - &self.shift, h))
    }

    /// Normalized monomial weights at `x` (the dual distribution).
    pub fn monomial_weights(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(x)?;
        Ok(self.log_weights(x).1)
    }

    /// Orthonormal basis of `W = span{ω_i − θ}`.
    pub fn subspace_basis(&self) -> SubspaceBasis {
        SubspaceBasis::spanning(&self.shifted_exponents())
    }
}

/// `n × m` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    basis: DMatrix<f64>,
}

impl SubspaceBasis {
    /// Basis for the column span of `vectors`, with numerical rank decided by
    /// singular values above `RANK_TOLERANCE` times the largest one.
    pub fn spanning(vectors: &DMatrix<f64>) -> Self {
        let n = vectors.nrows();
        if vectors.ncols() == 0 || vectors.iter().all(|v| *v == 0.0) {
            return SubspaceBasis { basis: DMatrix::zeros(n, 0) };
        }
        let svd = vectors.clone().svd(true, false);
        let u = svd.u.expect("requested U");
        let sigma_max = svd.singular_values.max();
        let mut keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > RANK_TOLERANCE * sigma_max)
            .collect();
        // Deterministic ordering and sign: descending singular value, first
        // nonzero entry positive.
        keep.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let mut basis = DMatrix::zeros(n, keep.len());
        for (j, &i) in keep.iter().enumerate() {
            let mut col = u.column(i).into_owned();
            if let Some(first) = col.iter().find(|v| v.abs() > 1e-12) {
                if *first < 0.0 {
                    col.neg_mut();
                }
            }
            basis.set_column(j, &col);
        }
        SubspaceBasis { basis }
    }

    pub fn from_orthonormal(basis: DMatrix<f64>) -> Self {
        SubspaceBasis { basis }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Dimension `m` of the subspace.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// `B y ∈ ℝⁿ` for subspace coordinates `y ∈ ℝᵐ`.
    pub fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.basis * y
    }

    /// `Bᵀ v`, the coordinates of the orthogonal projection of `v`.
    pub fn coordinates(&self, v: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(v)
    }

    /// Distance from `v` to the subspace.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        (v - self.lift(&self.coordinates(v))).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval() -> GpInstance {
        GpInstance::new(vec![vec![0.0], vec![0.5], vec![1.0]], vec![1.0; 3], vec![0.0]).unwrap()
    }

    #[test]
    fn objective_at_origin_is_log_l1() {
        let inst = GpInstance::new(
            vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 3.0]],
            vec![0.5, 2.0, 1.5],
            vec![0.2, 0.1],
        )
        .unwrap();
        let f = inst.evaluate_objective(&DVector::zeros(2)).unwrap();
        assert!((f - 4.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn single_term_is_constant() {
        let inst = GpInstance::new(vec![vec![1.0, -2.0]], vec![3.0], vec![1.0, -2.0]).unwrap();
        let x = DVector::from_vec(vec![7.0, -11.0]);
        assert!((inst.evaluate_objective(&x).unwrap() - 3.0f64.ln()).abs() < 1e-15);
        assert_eq!(inst.gradient(&x).unwrap(), DVector::zeros(2));
        assert_eq!(inst.hessian(&x).unwrap(), DMatrix::zeros(2, 2));
        assert_eq!(inst.subspace_basis().dim(), 0);
    }

    #[test]
    fn symmetric_pair_hessian_is_one() {
        let inst = GpInstance::new(vec![vec![-1.0], vec![1.0]], vec![1.0, 1.0], vec![0.0]).unwrap();
        let h = inst.hessian(&DVector::zeros(1)).unwrap();
        assert!((h[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn no_overflow_for_huge_arguments() {
        let inst = interval();
        let f = inst.evaluate_objective(&DVector::from_element(1, 1e8)).unwrap();
        assert!((f - 1e8).abs() / 1e8 < 1e-15);
        let f = inst.evaluate_objective(&DVector::from_element(1, -1e8)).unwrap();
        assert!(f.is_finite() && f.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(GpInstance::new(vec![], vec![], vec![]).is_err());
        assert!(GpInstance::new(vec![vec![1.0]], vec![0.0], vec![0.0]).is_err());
        assert!(GpInstance::new(vec![vec![1.0]], vec![1.0], vec![0.0, 1.0]).is_err());
        let inst = interval();
        assert!(matches!(
            inst.evaluate_objective(&DVector::zeros(2)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(inst.gradient(&DVector::from_element(1, f64::NAN)).is_err());
    }

    #[test]
    fn interval_basis_is_one_dimensional() {
        let b = interval().subspace_basis();
        assert_eq!(b.dim(), 1);
        assert!((b.matrix()[(0, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bipartite_scaling_span_has_dimension_two() {
        // (e_i, e_j) for i, j ∈ {0, 1}, shifted by the uniform marginals.
        let mut ex = vec![];
        for i in 0..2 {
            for j in 0..2 {
                let mut w = vec![0.0; 4];
                w[i] = 1.0;
                w[2 + j] = 1.0;
                ex.push(w);
            }
        }
        let inst = GpInstance::new(ex, vec![1.0; 4], vec![0.5; 4]).unwrap();
        let b = inst.subspace_basis();
        assert_eq!(b.dim(), 2);
        let gram = b.matrix().tr_mul(b.matrix());
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-12);
    }
}
