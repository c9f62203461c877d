//! The lifted domain `D_{θ,R}` (or `D_θ` without a radius) and its
//! self-concordant barrier.
//!
//! Points are `(x, z, t)` with `x` in coordinates of the subspace
//! `W = span{ω_i − θ}`. Vectors over the domain are packed as
//! `[x (m) | z (k) | t]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::instance::{GpInstance, SubspaceBasis};
use crate::linalg::SpdFactor;

/// Slacks at or below this value count as infeasible.
pub const FEASIBILITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct InteriorPoint {
    pub x: DVector<f64>,
    pub z: DVector<f64>,
    pub t: f64,
}

impl InteriorPoint {
    pub fn to_vector(&self) -> DVector<f64> {
        let (m, k) = (self.x.len(), self.z.len());
        DVector::from_fn(m + k + 1, |i, _| {
            if i < m {
                self.x[i]
            } else if i < m + k {
                self.z[i - m]
            } else {
                self.t
            }
        })
    }

    pub fn from_vector(v: &DVector<f64>, m: usize, k: usize) -> Self {
        InteriorPoint {
            x: v.rows(0, m).into_owned(),
            z: v.rows(m, k).into_owned(),
            t: v[m + k],
        }
    }
}

/// Constraint slacks at a point; all positive iff the point is strictly
/// feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct Slacks {
    pub z: DVector<f64>,
    /// `log z_i − ⟨a_i, x⟩ + t − log q_i`.
    pub epigraph: DVector<f64>,
    pub t_cap: f64,
    pub simplex: f64,
    /// `R² − ‖x‖²`.
    pub ball: Option<f64>,
}

impl Slacks {
    pub fn min(&self) -> f64 {
        let mut m = self.z.min().min(self.epigraph.min()).min(self.t_cap).min(self.simplex);
        if let Some(b) = self.ball {
            m = m.min(b);
        }
        m
    }

    fn violations(&self) -> Vec<String> {
        let bad = |v: f64| !(v > FEASIBILITY_FLOOR);
        let mut out = Vec::new();
        for (i, v) in self.z.iter().enumerate() {
            if bad(*v) {
                out.push(format!("z[{i}] > 0"));
            }
        }
        for (i, v) in self.epigraph.iter().enumerate() {
            if bad(*v) {
                out.push(format!("epigraph[{i}]"));
            }
        }
        if bad(self.t_cap) {
            out.push("t < t_max".into());
        }
        if bad(self.simplex) {
            out.push("sum(z) < 1".into());
        }
        if self.ball.is_some_and(bad) {
            out.push("|x| < R".into());
        }
        out
    }
}

/// The domain together with everything the barrier needs precomputed.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    instance: GpInstance,
    basis: SubspaceBasis,
    /// Row `i` is `a_i = Bᵀ(ω_i − θ)`.
    directions: DMatrix<f64>,
    log_q: DVector<f64>,
    t_max: f64,
    radius: Option<f64>,
}

impl DomainSpec {
    /// `D_θ`, for shifts in the relative interior of the Newton polytope.
    pub fn well_conditioned(instance: &GpInstance) -> Self {
        Self::build(instance, instance.subspace_basis(), None)
    }

    /// `D_{θ,R}`.
    pub fn with_radius(instance: &GpInstance, radius: f64) -> Result<Self> {
        Self::with_basis(instance, instance.subspace_basis(), Some(radius))
    }

    /// Uses a caller-supplied orthonormal basis of `W`.
    pub fn with_basis(instance: &GpInstance, basis: SubspaceBasis, radius: Option<f64>) -> Result<Self> {
        if let Some(r) = radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::input(format!("radius must be positive and finite, got {r}")));
            }
        }
        if basis.ambient_dim() != instance.n() {
            return Err(Error::DimensionMismatch { expected: instance.n(), found: basis.ambient_dim() });
        }
        Ok(Self::build(instance, basis, radius))
    }

    fn build(instance: &GpInstance, basis: SubspaceBasis, radius: Option<f64>) -> Self {
        let directions = instance.shifted_exponents().transpose() * basis.matrix();
        let log_q = instance.coefficients().map(f64::ln);
        let t_max = (5.0 * instance.k() as f64 * instance.q_l1()).ln();
        DomainSpec { instance: instance.clone(), basis, directions, log_q, t_max, radius }
    }

    pub fn instance(&self) -> &GpInstance {
        &self.instance
    }

    pub fn basis(&self) -> &SubspaceBasis {
        &self.basis
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Dimension `m` of the x-block.
    pub fn m(&self) -> usize {
        self.basis.dim()
    }

    pub fn k(&self) -> usize {
        self.instance.k()
    }

    /// Total dimension `m + k + 1`.
    pub fn dim(&self) -> usize {
        self.m() + self.k() + 1
    }

    pub fn complexity_parameter(&self) -> f64 {
        let k = self.k() as f64;
        if self.radius.is_some() {
            2.0 * k + 3.0
        } else {
            2.0 * k + 2.0
        }
    }

    /// The objective direction: the unit vector of the `t`-coordinate.
    pub fn objective_direction(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.dim());
        c[self.dim() - 1] = 1.0;
        c
    }

    /// `(0; 1/2k, …, 1/2k; log(4k‖q‖₁))`.
    pub fn default_start(&self) -> InteriorPoint {
        let k = self.k() as f64;
        InteriorPoint {
            x: DVector::zeros(self.m()),
            z: DVector::from_element(self.k(), 1.0 / (2.0 * k)),
            t: (4.0 * k * self.instance.q_l1()).ln(),
        }
    }

    /// `Bx ∈ ℝⁿ`.
    pub fn lift(&self, x: &DVector<f64>) -> DVector<f64> {
        self.basis.lift(x)
    }

    fn check_shape(&self, p: &InteriorPoint) -> Result<()> {
        if p.x.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), found: p.x.len() });
        }
        if p.z.len() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), found: p.z.len() });
        }
        Ok(())
    }

    pub fn slacks(&self, p: &InteriorPoint) -> Result<Slacks> {
        self.check_shape(p)?;
        let ax = &self.directions * &p.x;
        let epigraph = DVector::from_fn(self.k(), |i, _| p.z[i].ln() - ax[i] + p.t - self.log_q[i]);
        Ok(Slacks {
            z: p.z.clone(),
            epigraph,
            t_cap: self.t_max - p.t,
            simplex: 1.0 - p.z.sum(),
            ball: self.radius.map(|r| r * r - p.x.norm_squared()),
        })
    }

    /// Slacks of a strictly feasible point, or the list of violated
    /// constraints.
    pub fn check_feasible(&self, p: &InteriorPoint) -> Result<Slacks> {
        let s = self.slacks(p)?;
        let violated = s.violations();
        if violated.is_empty() {
            Ok(s)
        } else {
            Err(Error::Infeasible { violated })
        }
    }

    pub fn value(&self, p: &InteriorPoint) -> Result<f64> {
        let s = self.check_feasible(p)?;
        let mut v = -s.z.iter().map(|z| z.ln()).sum::<f64>() - s.epigraph.iter().map(|e| e.ln()).sum::<f64>()
            - s.t_cap.ln()
            - s.simplex.ln();
        if let Some(b) = s.ball {
            v -= b.ln();
        }
        Ok(v)
    }

    pub fn gradient(&self, p: &InteriorPoint) -> Result<DVector<f64>> {
        let s = self.check_feasible(p)?;
        Ok(self.gradient_at(p, &s))
    }

    fn gradient_at(&self, p: &InteriorPoint, s: &Slacks) -> DVector<f64> {
        let (m, k) = (self.m(), self.k());
        let mut g = DVector::zeros(m + k + 1);
        let inv_s = s.epigraph.map(|e| 1.0 / e);
        // x-block: Σ a_i / s_i
        let gx = self.directions.tr_mul(&inv_s);
        g.rows_mut(0, m).copy_from(&gx);
        if let Some(b) = s.ball {
            for j in 0..m {
                g[j] += 2.0 * p.x[j] / b;
            }
        }
        let simplex = 1.0 / s.simplex;
        for i in 0..k {
            g[m + i] = -1.0 / p.z[i] - inv_s[i] / p.z[i] + simplex;
        }
        g[m + k] = -inv_s.sum() + 1.0 / s.t_cap;
        g
    }

    pub fn hessian(&self, p: &InteriorPoint) -> Result<DMatrix<f64>> {
        let s = self.check_feasible(p)?;
        Ok(self.hessian_at(p, &s))
    }

    fn hessian_at(&self, p: &InteriorPoint, s: &Slacks) -> DMatrix<f64> {
        let (m, k) = (self.m(), self.k());
        let dim = m + k + 1;
        // Column i is ∇s_i / s_i with ∇s_i = (−a_i, e_i/z_i, 1).
        let mut gs = DMatrix::zeros(dim, k);
        for i in 0..k {
            let inv = 1.0 / s.epigraph[i];
            for j in 0..m {
                gs[(j, i)] = -self.directions[(i, j)] * inv;
            }
            gs[(m + i, i)] = inv / p.z[i];
            gs[(m + k, i)] = inv;
        }
        let mut h = &gs * gs.transpose();
        let simplex2 = 1.0 / (s.simplex * s.simplex);
        for i in 0..k {
            let zi = p.z[i];
            h[(m + i, m + i)] += 1.0 / (s.epigraph[i] * zi * zi) + 1.0 / (zi * zi);
            for j in 0..k {
                h[(m + i, m + j)] += simplex2;
            }
        }
        h[(m + k, m + k)] += 1.0 / (s.t_cap * s.t_cap);
        if let Some(b) = s.ball {
            for a in 0..m {
                h[(a, a)] += 2.0 / b;
                for c in 0..m {
                    h[(a, c)] += 4.0 * p.x[a] * p.x[c] / (b * b);
                }
            }
        }
        h
    }

    /// Gradient, Hessian factorization and slacks at a point, shared by all
    /// Newton quantities computed there.
    pub fn local_model(&self, p: &InteriorPoint) -> Result<LocalModel> {
        let s = self.check_feasible(p)?;
        let gradient = self.gradient_at(p, &s);
        let hessian = self.hessian_at(p, &s);
        let factor = SpdFactor::new(&hessian)?;
        Ok(LocalModel { gradient, factor, min_slack: s.min(), m: self.m(), k: self.k() })
    }

    /// `‖v‖_(p) = √(vᵀ H(p) v)`.
    pub fn local_norm(&self, p: &InteriorPoint, v: &DVector<f64>) -> Result<f64> {
        let h = self.hessian(p)?;
        if v.len() != h.nrows() {
            return Err(Error::DimensionMismatch { expected: h.nrows(), found: v.len() });
        }
        Ok(v.dot(&(&h * v)).max(0.0).sqrt())
    }

    /// `‖H(p)⁻¹(ηc + g(p))‖_(p)`.
    pub fn newton_decrement(&self, p: &InteriorPoint, eta: f64, c: &DVector<f64>) -> Result<f64> {
        let model = self.local_model(p)?;
        Ok(model.decrement(&model.penalized_gradient(eta, c)))
    }

    /// The full Newton step for `ηc + Ψ` from `p`.
    pub fn newton_step(&self, p: &InteriorPoint, eta: f64, c: &DVector<f64>) -> Result<InteriorPoint> {
        let model = self.local_model(p)?;
        self.step_with(&model, p, &model.penalized_gradient(eta, c))
    }

    /// `p − H⁻¹ r` using a prepared model; errors when the result leaves the
    /// domain.
    pub fn step_with(&self, model: &LocalModel, p: &InteriorPoint, r: &DVector<f64>) -> Result<InteriorPoint> {
        let d = model.direction(r);
        let next = InteriorPoint::from_vector(&(p.to_vector() + &d), self.m(), self.k());
        match self.check_feasible(&next) {
            Ok(_) => Ok(next),
            Err(Error::Infeasible { .. }) => Err(Error::StepInfeasible { decrement: model.decrement(r) }),
            Err(e) => Err(e),
        }
    }
}

/// Barrier gradient and Hessian factorization at a fixed point.
pub struct LocalModel {
    pub gradient: DVector<f64>,
    factor: SpdFactor,
    pub min_slack: f64,
    m: usize,
    k: usize,
}

impl LocalModel {
    pub fn ridge_used(&self) -> bool {
        self.factor.ridge_used
    }

    /// `ηc + g`.
    pub fn penalized_gradient(&self, eta: f64, c: &DVector<f64>) -> DVector<f64> {
        &self.gradient + c * eta
    }

    /// `‖H⁻¹ r‖_(p) = √(rᵀ H⁻¹ r)`.
    pub fn decrement(&self, r: &DVector<f64>) -> f64 {
        self.factor.inverse_norm(r)
    }

    /// `−H⁻¹ r`.
    pub fn direction(&self, r: &DVector<f64>) -> DVector<f64> {
        -self.factor.solve(r)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.k)
    }
}
