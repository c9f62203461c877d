//! Applied problems as shifted GPs, and solver output read back as
//! application objects.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::GpInstance;

const TARGET_TOLERANCE: f64 = 1e-12;

/// Sign convention of the column block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingConvention {
    /// Monomials `M_ij e^{x_i + y_j}`, shift `(r, c)`.
    #[default]
    Sum,
    /// Monomials `M_ij e^{x_i − y_j}`, shift `(r, −c)`; the solution maps to
    /// the sum convention by `y → −y`.
    Difference,
}

/// Rescale a nonnegative matrix to prescribed row and column marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingProblem {
    pub matrix: DMatrix<f64>,
    pub row_targets: DVector<f64>,
    pub col_targets: DVector<f64>,
}

impl ScalingProblem {
    pub fn new(matrix: DMatrix<f64>, row_targets: DVector<f64>, col_targets: DVector<f64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if row_targets.len() != rows {
            return Err(Error::DimensionMismatch { expected: rows, found: row_targets.len() });
        }
        if col_targets.len() != cols {
            return Err(Error::DimensionMismatch { expected: cols, found: col_targets.len() });
        }
        if matrix.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::input("matrix entries must be nonnegative and finite"));
        }
        if !matrix.iter().any(|v| *v > 0.0) {
            return Err(Error::input("matrix has no positive entry"));
        }
        for (name, t) in [("row", &row_targets), ("column", &col_targets)] {
            if t.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::input(format!("{name} targets must be nonnegative")));
            }
            if (t.sum() - 1.0).abs() > TARGET_TOLERANCE {
                return Err(Error::input(format!("{name} targets sum to {}, expected 1", t.sum())));
            }
        }
        Ok(ScalingProblem { matrix, row_targets, col_targets })
    }

    /// Uniform marginals.
    pub fn uniform(matrix: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        let r = DVector::from_element(rows, 1.0 / rows as f64);
        let c = DVector::from_element(cols, 1.0 / cols as f64);
        Self::new(matrix, r, c)
    }
}

fn positive_entries(m: &DMatrix<f64>) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    (0..m.ncols()).flat_map(move |j| (0..m.nrows()).map(move |i| (i, j, m[(i, j)]))).filter(|e| e.2 > 0.0)
}

pub fn matrix_scaling_instance(sp: &ScalingProblem) -> Result<GpInstance> {
    matrix_scaling_instance_with(sp, ScalingConvention::Sum)
}

/// One exponent `(e_i, ±e_j)` per positive entry, column-major order.
pub fn matrix_scaling_instance_with(sp: &ScalingProblem, convention: ScalingConvention) -> Result<GpInstance> {
    let (rows, cols) = sp.matrix.shape();
    let sign = match convention {
        ScalingConvention::Sum => 1.0,
        ScalingConvention::Difference => -1.0,
    };
    let entries: Vec<_> = positive_entries(&sp.matrix).collect();
    let mut exponents = DMatrix::zeros(rows + cols, entries.len());
    let mut q = DVector::zeros(entries.len());
    for (col, &(i, j, v)) in entries.iter().enumerate() {
        exponents[(i, col)] = 1.0;
        exponents[(rows + j, col)] = sign;
        q[col] = v;
    }
    let mut shift = DVector::zeros(rows + cols);
    shift.rows_mut(0, rows).copy_from(&sp.row_targets);
    shift.rows_mut(rows, cols).copy_from(&(&sp.col_targets * sign));
    GpInstance::from_parts(exponents, q, shift)
}

/// Exponents `e_i − e_j` for every positive off-diagonal `M_ij`, shift 0.
pub fn matrix_balancing_instance(m: &DMatrix<f64>) -> Result<GpInstance> {
    if !m.is_square() {
        return Err(Error::input("balancing needs a square matrix"));
    }
    if m.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::input("matrix entries must be nonnegative and finite"));
    }
    let n = m.nrows();
    let edges: Vec<_> = positive_entries(m).filter(|(i, j, _)| i != j).collect();
    if edges.is_empty() {
        return Err(Error::input("matrix has no positive off-diagonal entry"));
    }
    graph_instance(&GraphGp::new(n, edges, DVector::zeros(n))?)
}

/// `log Σ_{(i,j)∈E} q_ij e^{x_i − x_j} − ⟨θ, x⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphGp {
    pub n: usize,
    /// `(tail i, head j, weight q_ij)`.
    pub edges: Vec<(usize, usize, f64)>,
    pub shift: DVector<f64>,
}

impl GraphGp {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>, shift: DVector<f64>) -> Result<Self> {
        if shift.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: shift.len() });
        }
        if edges.is_empty() {
            return Err(Error::input("graph has no edges"));
        }
        for &(i, j, w) in &edges {
            if i >= n || j >= n {
                return Err(Error::input(format!("edge ({i}, {j}) refers to a vertex outside 0..{n}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::input(format!("edge ({i}, {j}) has non-positive weight {w}")));
            }
            if i == j {
                log::warn!("self-loop at vertex {i} contributes a zero exponent");
            }
        }
        Ok(GraphGp { n, edges, shift })
    }

    pub fn has_self_loops(&self) -> bool {
        self.edges.iter().any(|(i, j, _)| i == j)
    }
}

/// The incidence matrix of the graph as exponents, one column per edge.
pub fn graph_instance(g: &GraphGp) -> Result<GpInstance> {
    let mut exponents = DMatrix::zeros(g.n, g.edges.len());
    for (col, &(i, j, _)) in g.edges.iter().enumerate() {
        exponents[(i, col)] += 1.0;
        exponents[(j, col)] -= 1.0;
    }
    let q = DVector::from_iterator(g.edges.len(), g.edges.iter().map(|e| e.2));
    GpInstance::from_parts(exponents, q, g.shift.clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    /// Diagonal of `L = diag(e^{x})`.
    pub left: DVector<f64>,
    /// Diagonal of `R = diag(e^{y})`.
    pub right: DVector<f64>,
    /// `N = L M R`.
    pub scaled: DMatrix<f64>,
    /// `‖(r(N), c(N))/‖N‖₁ − (r, c)‖₂`.
    pub residual: f64,
}

/// Reads `x = (x-block, y-block)` back as diagonal scalings.
pub fn extract_scaling(sp: &ScalingProblem, x: &DVector<f64>, convention: ScalingConvention) -> Result<ScalingResult> {
    let (rows, cols) = sp.matrix.shape();
    if x.len() != rows + cols {
        return Err(Error::DimensionMismatch { expected: rows + cols, found: x.len() });
    }
    let sign = match convention {
        ScalingConvention::Sum => 1.0,
        ScalingConvention::Difference => -1.0,
    };
    let xs = x.rows(0, rows).into_owned();
    let ys = x.rows(rows, cols) * sign;
    let left = xs.map(f64::exp);
    let right = ys.map(f64::exp);
    let scaled = DMatrix::from_fn(rows, cols, |i, j| left[i] * sp.matrix[(i, j)] * right[j]);
    let residual = marginal_residual(&scaled, &sp.row_targets, &sp.col_targets);
    Ok(ScalingResult { left, right, scaled, residual })
}

/// `‖(r(N), c(N))/‖N‖₁ − (r, c)‖₂` for a nonnegative `N`.
pub fn marginal_residual(n: &DMatrix<f64>, r: &DVector<f64>, c: &DVector<f64>) -> f64 {
    let total = n.sum();
    let rows = n.column_sum() / total - r;
    let cols = n.row_sum().transpose() / total - c;
    (rows.norm_squared() + cols.norm_squared()).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancingResult {
    /// Diagonal of `D = diag(e^{x})`.
    pub scaling: DVector<f64>,
    /// `N = D M D⁻¹`.
    pub balanced: DMatrix<f64>,
    /// `‖r(N) − c(N)‖₂ / ‖N‖₁`, the gradient norm of the balancing GP.
    pub imbalance: f64,
}

pub fn extract_balancing(m: &DMatrix<f64>, x: &DVector<f64>) -> Result<BalancingResult> {
    if !m.is_square() || x.len() != m.nrows() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: x.len() });
    }
    let n = m.nrows();
    let scaling = x.map(f64::exp);
    let balanced =
        DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { scaling[i] * m[(i, j)] / scaling[j] });
    let imbalance = (balanced.column_sum() - balanced.row_sum().transpose()).norm() / balanced.sum();
    Ok(BalancingResult { scaling, balanced, imbalance })
}

/// `p_i = q_i e^{⟨ω_i − θ, x⟩ − F_θ(x)}`, the distribution whose mean is
/// `θ + ∇F_θ(x)`.
pub fn dual_distribution(inst: &GpInstance, x: &DVector<f64>) -> Result<DVector<f64>> {
    inst.monomial_weights(x)
}

/// `D_KL(p‖q) = Σ p_i log(p_i/q_i)` with `0 log 0 = 0`; `q` need not be
/// normalized.
pub fn kl_divergence(p: &DVector<f64>, q: &DVector<f64>) -> f64 {
    p.iter()
        .zip(q.iter())
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum()
}

/// Mean `Σ p_i ω_i` of the exponents under `p`.
pub fn dual_mean(inst: &GpInstance, p: &DVector<f64>) -> DVector<f64> {
    inst.exponents() * p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_scaling_instance() {
        let sp = ScalingProblem::uniform(DMatrix::from_element(2, 2, 1.0)).unwrap();
        let inst = matrix_scaling_instance(&sp).unwrap();
        assert_eq!(inst.k(), 4);
        assert_eq!(inst.n(), 4);
        assert!(inst.coefficients().iter().all(|q| *q == 1.0));
        assert!(inst.shift().iter().all(|t| *t == 0.5));
        assert_eq!(inst.exponent(2).as_slice(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn zero_entries_are_omitted() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 3.0]);
        let inst = matrix_scaling_instance(&ScalingProblem::uniform(m).unwrap()).unwrap();
        assert_eq!(inst.k(), 3);
        assert!(ScalingProblem::uniform(DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn gradient_identity() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.5, 0.0, 3.0, 1.0]);
        let r = DVector::from_vec(vec![0.3, 0.7]);
        let c = DVector::from_vec(vec![0.2, 0.5, 0.3]);
        let sp = ScalingProblem::new(m, r.clone(), c.clone()).unwrap();
        let x = DVector::from_vec(vec![0.1, -0.4, 0.7, 0.2, -0.3]);
        for conv in [ScalingConvention::Sum, ScalingConvention::Difference] {
            let inst = matrix_scaling_instance_with(&sp, conv).unwrap();
            let mut xc = x.clone();
            if conv == ScalingConvention::Difference {
                for j in 2..5 {
                    xc[j] = -xc[j];
                }
            }
            let g = inst.gradient(&xc).unwrap();
            let res = extract_scaling(&sp, &xc, conv).unwrap();
            assert!((g.norm() - res.residual).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_balancing_is_optimal_at_zero() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 5.0, 3.0, 2.0, 3.0, 0.0]);
        let inst = matrix_balancing_instance(&m).unwrap();
        assert_eq!(inst.k(), 6);
        assert!(inst.gradient(&DVector::zeros(3)).unwrap().norm() < 1e-15);
        assert!(matrix_balancing_instance(&DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn graph_incidence() {
        let g = GraphGp::new(3, vec![(0, 1, 1.0), (1, 2, 2.0)], DVector::zeros(3)).unwrap();
        let inst = graph_instance(&g).unwrap();
        assert_eq!(inst.exponent(0).as_slice(), &[1.0, -1.0, 0.0]);
        assert_eq!(inst.exponent(1).as_slice(), &[0.0, 1.0, -1.0]);
        assert!(GraphGp::new(2, vec![(0, 2, 1.0)], DVector::zeros(2)).is_err());
        assert!(GraphGp::new(2, vec![(0, 1, 0.0)], DVector::zeros(2)).is_err());
        let looped = GraphGp::new(2, vec![(0, 0, 1.0), (0, 1, 1.0)], DVector::zeros(2)).unwrap();
        assert!(looped.has_self_loops());
    }

    #[test]
    fn triangle_value_at_zero() {
        let g = GraphGp::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)], DVector::zeros(3)).unwrap();
        let inst = graph_instance(&g).unwrap();
        let (f, grad, _) = inst.evaluate_all(&DVector::zeros(3)).unwrap();
        assert!((f - 3f64.ln()).abs() < 1e-15);
        assert!(grad.norm() < 1e-15);
    }

    #[test]
    fn extract_at_zero_is_identity() {
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let sp = ScalingProblem::uniform(m.clone()).unwrap();
        let res = extract_scaling(&sp, &DVector::zeros(4), ScalingConvention::Sum).unwrap();
        assert_eq!(res.scaled, m);
        assert!(res.residual < 1e-15);
        let bal = extract_balancing(&m, &DVector::zeros(2)).unwrap();
        assert!(bal.imbalance < 1e-15);
    }

    #[test]
    fn dual_distribution_at_zero_and_duality() {
        let inst =
            GpInstance::new(vec![vec![0.0, 1.0], vec![2.0, 0.0], vec![1.0, 1.0]], vec![1.0, 2.0, 3.0], vec![1.0, 0.5])
                .unwrap();
        let p = dual_distribution(&inst, &DVector::zeros(2)).unwrap();
        let expected = inst.coefficients() / 6.0;
        assert!((&p - &expected).amax() < 1e-15);
        let x = DVector::from_vec(vec![0.4, -1.3]);
        let p = dual_distribution(&inst, &x).unwrap();
        assert!((p.sum() - 1.0).abs() < 1e-12);
        let (f, g, _) = inst.evaluate_all(&x).unwrap();
        assert!((f + kl_divergence(&p, inst.coefficients()) - g.dot(&x)).abs() < 1e-12);
        assert!((dual_mean(&inst, &p) - inst.shift() - &g).amax() < 1e-12);
    }

    #[test]
    fn kl_handles_zero_mass() {
        let p = DVector::from_vec(vec![0.0, 1.0]);
        let q = DVector::from_vec(vec![0.5, 0.5]);
        assert!((kl_divergence(&p, &q) - 2f64.ln()).abs() < 1e-15);
    }
}
