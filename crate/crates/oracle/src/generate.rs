//! Seeded random test instances as raw data.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

/// Exponents as columns, coefficients and shift.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInstance {
    pub exponents: DMatrix<f64>,
    pub coefficients: DVector<f64>,
    pub shift: DVector<f64>,
}

impl RawInstance {
    pub fn exponent_rows(&self) -> Vec<Vec<f64>> {
        self.exponents.column_iter().map(|c| c.iter().copied().collect()).collect()
    }
}

/// Exponents on the grid `¼ℤ ∩ [−2, 2]`, coefficients in `[0.5, 2]`, shift at
/// the barycenter of the exponents (always in the relative interior).
pub fn well_conditioned<R: Rng>(rng: &mut R, n: usize, k: usize) -> RawInstance {
    let exponents = DMatrix::from_fn(n, k, |_, _| rng.gen_range(-8i32..=8) as f64 / 4.0);
    let coefficients = DVector::from_fn(k, |_, _| rng.gen_range(0.5..2.0));
    let shift = exponents.column_mean();
    RawInstance { exponents, coefficients, shift }
}

/// Integral exponents with entries in `[−3, 3]`, unit coefficients, shift at
/// the barycenter.
pub fn integral<R: Rng>(rng: &mut R, n: usize, k: usize) -> RawInstance {
    let exponents = DMatrix::from_fn(n, k, |_, _| rng.gen_range(-3i32..=3) as f64);
    let coefficients = DVector::from_element(k, 1.0);
    let shift = exponents.column_mean();
    RawInstance { exponents, coefficients, shift }
}

/// A simple directed graph on `n` vertices with `edges` distinct arcs, no
/// self-loops, returned as `(tail, head)` pairs.
pub fn digraph<R: Rng>(rng: &mut R, n: usize, edges: usize) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
    all.shuffle(rng);
    all.truncate(edges.min(all.len()));
    all.sort_unstable();
    all
}

/// Incidence matrix (column `e_i − e_j` per arc).
pub fn incidence(n: usize, arcs: &[(usize, usize)]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, arcs.len());
    for (c, &(i, j)) in arcs.iter().enumerate() {
        m[(i, c)] = 1.0;
        m[(j, c)] = -1.0;
    }
    m
}

/// Entrywise positive matrix with entries in `[0.1, 10]` (log-uniform).
pub fn positive_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| 10f64.powf(rng.gen_range(-1.0..1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_and_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = well_conditioned(&mut rng, 3, 7);
        assert_eq!(inst.exponents.shape(), (3, 7));
        assert!(inst.exponents.iter().all(|v| v.abs() <= 2.0 && (v * 4.0).fract() == 0.0));
        let arcs = digraph(&mut rng, 4, 20);
        assert_eq!(arcs.len(), 12);
        let inc = incidence(4, &arcs);
        assert!(inc.column_iter().all(|c| c.sum() == 0.0));
    }
}
