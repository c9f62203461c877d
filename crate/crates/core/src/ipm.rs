//! Path-following interior-point method on the lifted domain.
//!
//! A solve runs a preliminary stage, which walks the auxiliary central path
//! of `−μ g(p₀') + Ψ` from the default start towards the analytic center, and
//! then the main stage, which follows the central path of `ηc + Ψ` with `η`
//! growing by `1 + 1/(8√ν)` per full Newton step.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::barrier::{DomainSpec, InteriorPoint};
use crate::condition::{self, FacetLimits, MembershipClass, Polytope};
use crate::error::{Error, Result};
use crate::instance::GpInstance;

/// Main-stage iterates with a larger Newton decrement are treated as a
/// numerical breakdown.
pub const CONTRACT_DECREMENT: f64 = 0.25;

/// The preliminary stage ends once `‖H⁻¹g‖_(p)` drops to this value.
pub const CENTERING_THRESHOLD: f64 = 1.0 / 6.0;

/// Slacks below this value during the preliminary stage count as divergence.
pub const DIVERGENCE_SLACK: f64 = 1e-250;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    /// Target precision for the GP value, in `(0, 1)`.
    pub delta: f64,
    /// Target gradient norm in scaling mode.
    pub epsilon: Option<f64>,
    /// Lower bound `φ₀` on the facet gap, required by the general solver.
    pub facet_gap_lower: Option<f64>,
    /// Cap on main-stage iterations.
    pub max_iterations: Option<usize>,
    pub trace_enabled: bool,
}

impl SolveParams {
    pub fn new(delta: f64) -> Self {
        SolveParams { delta, epsilon: None, facet_gap_lower: None, max_iterations: None, trace_enabled: false }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn with_facet_gap_lower(mut self, phi0: f64) -> Self {
        self.facet_gap_lower = Some(phi0);
        self
    }

    pub fn with_max_iterations(mut self, cap: usize) -> Self {
        self.max_iterations = Some(cap);
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.trace_enabled = true;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::input(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::input(format!("epsilon must be positive, got {e}")));
            }
        }
        if let Some(p) = self.facet_gap_lower {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::input(format!("facet gap lower bound must be positive, got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Preliminary,
    Main,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub stage: Stage,
    pub iter: usize,
    /// `μ_i` in the preliminary stage, `η_i` in the main stage.
    pub parameter: f64,
    /// Newton decrement for the current penalized barrier at the iterate.
    pub decrement: f64,
    pub t: f64,
    pub min_slack: f64,
    pub ridge_used: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<TraceRecord>,
}

impl IterationTrace {
    pub fn stage(&self, stage: Stage) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.stage == stage)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,iter,parameter,decrement,t,min_slack,ridge_used\n");
        for r in &self.records {
            let stage = match r.stage {
                Stage::Preliminary => "preliminary",
                Stage::Main => "main",
            };
            let _ = writeln!(
                out,
                "{stage},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.iter, r.parameter, r.decrement, r.t, r.min_slack, r.ridge_used
            );
        }
        out
    }
}

/// Records only when enabled.
struct Recorder<'a> {
    trace: &'a mut IterationTrace,
    enabled: bool,
}

impl Recorder<'_> {
    fn push(&mut self, record: TraceRecord) {
        log::trace!("{record:?}");
        if self.enabled {
            self.trace.records.push(record);
        }
    }
}

/// Stopping rules for the preliminary stage beyond its own criterion.
#[derive(Debug, Clone, Copy, Default)]
pub struct DivergenceGuard {
    pub max_iterations: Option<usize>,
    pub max_x_norm: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PreliminaryOutcome {
    pub point: InteriorPoint,
    pub eta0: f64,
    /// Loop iterations plus the final Newton step for `Ψ_{η₀}`.
    pub iterations: usize,
}

/// Runs the preliminary stage from `start`. The returned point satisfies
/// `α₀(p₀) ≤ 1/9` in exact arithmetic.
pub fn preliminary_stage(
    spec: &DomainSpec,
    c: &DVector<f64>,
    start: &InteriorPoint,
    guard: DivergenceGuard,
    trace: &mut IterationTrace,
    trace_enabled: bool,
) -> Result<PreliminaryOutcome> {
    let mut rec = Recorder { trace, enabled: trace_enabled };
    let nu = spec.complexity_parameter();
    let shrink = 1.0 - 1.0 / (8.0 * nu.sqrt());
    let mut p = start.clone();
    let mut model = spec.local_model(&p)?;
    let g0 = model.gradient.clone();
    let mut mu = 1.0;
    let mut i = 0;
    while model.decrement(&model.gradient) > CENTERING_THRESHOLD {
        if guard.max_iterations.is_some_and(|cap| i >= cap) {
            return Err(Error::PromiseViolation(format!(
                "preliminary stage did not center within {i} iterations"
            )));
        }
        i += 1;
        mu *= shrink;
        let r = &model.gradient - &g0 * mu;
        p = spec.step_with(&model, &p, &r).map_err(|e| diverged(e, i))?;
        model = spec.local_model(&p).map_err(|e| diverged(e, i))?;
        let decrement = model.decrement(&(&model.gradient - &g0 * mu));
        rec.push(TraceRecord {
            stage: Stage::Preliminary,
            iter: i,
            parameter: mu,
            decrement,
            t: p.t,
            min_slack: model.min_slack,
            ridge_used: model.ridge_used(),
        });
        if !(model.min_slack >= DIVERGENCE_SLACK) || !decrement.is_finite() {
            return Err(Error::PromiseViolation(format!(
                "preliminary stage diverged at iteration {i} (minimum slack {:.3e})",
                model.min_slack
            )));
        }
        if let Some(bound) = guard.max_x_norm {
            let norm = p.x.norm();
            if norm > bound {
                return Err(Error::PromiseViolation(format!(
                    "preliminary stage diverged at iteration {i} (|x| = {norm:.3e} exceeds {bound:.3e})"
                )));
            }
        }
    }
    let c_norm = model.decrement(c);
    let eta0 = 1.0 / (12.0 * c_norm);
    let point = spec.step_with(&model, &p, &model.penalized_gradient(eta0, c))?;
    Ok(PreliminaryOutcome { point, eta0, iterations: i + 1 })
}

fn diverged(e: Error, iteration: usize) -> Error {
    match e {
        Error::StepInfeasible { .. } | Error::Numerical(_) => Error::PromiseViolation(format!(
            "preliminary stage broke down at iteration {iteration}: {e}"
        )),
        e => e,
    }
}

/// Optional early exits for the main stage.
#[derive(Debug, Clone, Copy, Default)]
pub struct MainStageExit {
    /// Stop once `(6/5)ν/η_i` is at most this value.
    pub certified_gap: Option<f64>,
    /// Stop once `‖∇F_θ(Bx_i)‖₂` is at most this value.
    pub gradient_norm: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MainOutcome {
    pub point: InteriorPoint,
    pub eta: f64,
    pub iterations: usize,
}

/// Runs at most `iterations` main-stage steps from `(p0, η₀)`. Every iterate,
/// including `p0`, is logged with its decrement `α_i(p_i)`.
pub fn main_stage(
    spec: &DomainSpec,
    p0: &InteriorPoint,
    eta0: f64,
    c: &DVector<f64>,
    iterations: usize,
    exit: MainStageExit,
    trace: &mut IterationTrace,
    trace_enabled: bool,
) -> Result<MainOutcome> {
    let mut rec = Recorder { trace, enabled: trace_enabled };
    let nu = spec.complexity_parameter();
    let growth = 1.0 + 1.0 / (8.0 * nu.sqrt());
    let mut p = p0.clone();
    let mut eta = eta0;
    let mut model = spec.local_model(&p)?;
    let mut i = 0;
    loop {
        let decrement = model.decrement(&model.penalized_gradient(eta, c));
        rec.push(TraceRecord {
            stage: Stage::Main,
            iter: i,
            parameter: eta,
            decrement,
            t: p.t,
            min_slack: model.min_slack,
            ridge_used: model.ridge_used(),
        });
        if !(decrement <= CONTRACT_DECREMENT) {
            return Err(Error::ContractViolation { iteration: i, decrement });
        }
        if i >= iterations || reached(spec, &p, eta, nu, exit)? {
            break;
        }
        i += 1;
        eta *= growth;
        p = spec.step_with(&model, &p, &model.penalized_gradient(eta, c))?;
        model = spec.local_model(&p)?;
    }
    Ok(MainOutcome { point: p, eta, iterations: i })
}

fn reached(spec: &DomainSpec, p: &InteriorPoint, eta: f64, nu: f64, exit: MainStageExit) -> Result<bool> {
    if exit.certified_gap.is_some_and(|d| 1.2 * nu / eta <= d) {
        return Ok(true);
    }
    if let Some(eps) = exit.gradient_norm {
        let g = spec.instance().gradient(&spec.lift(&p.x))?;
        if g.norm() <= eps {
            return Ok(true);
        }
    }
    Ok(false)
}

// ---------------------------------------------------------------------------
// Iteration budgets

/// Upper bound on `1/sym(p₀')` for `D_{θ,R}`: `10·max(R_θ R, k, log(4kβ))`.
pub fn inverse_symmetry_bound_general(big_r_theta: f64, radius: f64, k: usize, beta: f64) -> f64 {
    let k = k as f64;
    10.0 * (big_r_theta * radius).max(k).max((4.0 * k * beta).ln())
}

/// Upper bound on `1/sym(p₀')` for `D_θ`: `10·max(log(5kβ) R_θ/r_θ, k)`.
pub fn inverse_symmetry_bound_wc(big_r_theta: f64, r_theta: f64, k: usize, beta: f64) -> f64 {
    let k = k as f64;
    10.0 * ((5.0 * k * beta).ln() * big_r_theta / r_theta).max(k)
}

/// `8√ν log(36ν/sym)`.
pub fn preliminary_budget(nu: f64, inverse_symmetry: f64) -> f64 {
    8.0 * nu.sqrt() * (36.0 * nu * inverse_symmetry).ln()
}

/// `18√ν log(36ν (V − val)/(sym δ))`.
pub fn total_budget(nu: f64, inverse_symmetry: f64, value_range: f64, delta: f64) -> f64 {
    18.0 * nu.sqrt() * (36.0 * nu * value_range * inverse_symmetry / delta).ln()
}

/// `⌈10√ν log((6/5) ν/(η₀ δ))⌉`, at least zero.
pub fn main_stage_length(nu: f64, eta0: f64, delta: f64) -> usize {
    let t = 10.0 * nu.sqrt() * (1.2 * nu / (eta0 * delta)).ln();
    if t > 0.0 {
        t.ceil() as usize
    } else {
        0
    }
}

/// Bounds `log(5k) ≤ V − val ≤ log(5kβ)`.
pub fn value_range_bounds(k: usize, beta: f64) -> (f64, f64) {
    let k = k as f64;
    ((5.0 * k).ln(), (5.0 * k * beta).ln())
}

// ---------------------------------------------------------------------------
// Solvers

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    General,
    WellConditioned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub mode: SolveMode,
    #[serde(rename = "F_theta")]
    pub f_theta: f64,
    pub gradient_norm: f64,
    pub preliminary_iterations: usize,
    pub main_iterations: usize,
    pub iterations: usize,
    /// Certified bound on `F_θ(x) − F*_θ`.
    pub certified_gap: f64,
    pub eta0: f64,
    pub eta_final: f64,
    pub nu: f64,
    pub radius: Option<f64>,
    /// Dimension of the subspace `W`.
    pub subspace_dim: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// The approximate minimizer in `ℝⁿ`.
    pub x: DVector<f64>,
    /// The final interior point of the lifted domain.
    pub point: InteriorPoint,
    pub report: SolveReport,
    pub trace: IterationTrace,
}

struct RunConfig {
    target: f64,
    guard: DivergenceGuard,
    exit_gradient: Option<f64>,
    gap_offset: f64,
}

fn run(spec: &DomainSpec, params: &SolveParams, mode: SolveMode, cfg: RunConfig) -> Result<Solution> {
    let c = spec.objective_direction();
    let mut trace = IterationTrace::default();
    let start = spec.default_start();
    let pre = preliminary_stage(spec, &c, &start, cfg.guard, &mut trace, params.trace_enabled)?;
    let nu = spec.complexity_parameter();
    let formula = main_stage_length(nu, pre.eta0, cfg.target);
    let cap = params.max_iterations.unwrap_or(formula.saturating_mul(10).max(10));
    let length = formula.min(cap);
    let exit = MainStageExit { certified_gap: Some(cfg.target), gradient_norm: cfg.exit_gradient };
    let main = main_stage(spec, &pre.point, pre.eta0, &c, length, exit, &mut trace, params.trace_enabled)?;
    let x = spec.lift(&main.point.x);
    let (f_theta, grad, _) = spec.instance().evaluate_all(&x)?;
    log::debug!(
        "{mode:?} solve: {} preliminary + {} main iterations, eta {:.3e}",
        pre.iterations,
        main.iterations,
        main.eta
    );
    let report = SolveReport {
        mode,
        f_theta,
        gradient_norm: grad.norm(),
        preliminary_iterations: pre.iterations,
        main_iterations: main.iterations,
        iterations: pre.iterations + main.iterations,
        certified_gap: 1.2 * nu / main.eta + cfg.gap_offset,
        eta0: pre.eta0,
        eta_final: main.eta,
        nu,
        radius: spec.radius(),
        subspace_dim: spec.m(),
    };
    Ok(Solution { x, point: main.point, report, trace })
}

/// Radius `(n/φ₀) log(2β/(δ/2))` of the general-case domain.
pub fn general_radius(inst: &GpInstance, phi0: f64, delta: f64) -> f64 {
    let beta = condition::compute_beta(inst.coefficients());
    inst.n() as f64 / phi0 * (4.0 * beta / delta).ln()
}

/// Solves the GP to precision `δ` for any shift in the Newton polytope, given
/// a lower bound `φ₀` on the facet gap.
pub fn solve_gp_general(inst: &GpInstance, params: &SolveParams) -> Result<Solution> {
    params.validate()?;
    let phi0 = params
        .facet_gap_lower
        .ok_or_else(|| Error::input("the general solver needs a facet gap lower bound"))?;
    precheck_shift(inst, phi0)?;
    general_unchecked(inst, params, phi0, None).map_err(|e| match e {
        Error::PromiseViolation(msg) => {
            Error::PromiseViolation(format!("shift likely outside the Newton polytope: {msg}"))
        }
        e => e,
    })
}

fn precheck_shift(inst: &GpInstance, phi0: f64) -> Result<()> {
    let limits = FacetLimits::default();
    let basis = condition::affine_basis(inst.exponents());
    if basis.dim() == 0 || inst.k() > limits.max_points || basis.dim() > limits.max_dim {
        return Ok(());
    }
    let poly = Polytope::with_limits(inst.exponents(), limits)?;
    let membership = poly.membership(inst.shift());
    if membership.class == MembershipClass::Outside {
        return Err(Error::PromiseViolation(format!(
            "shift lies outside the Newton polytope (margin {:.3e})",
            membership.margin
        )));
    }
    let phi = poly.facet_gap();
    if phi0 > phi * (1.0 + 1e-9) {
        log::warn!("facet gap lower bound {phi0} exceeds the computed facet gap {phi}");
    }
    Ok(())
}

fn general_unchecked(
    inst: &GpInstance,
    params: &SolveParams,
    phi0: f64,
    exit_gradient: Option<f64>,
) -> Result<Solution> {
    let delta = params.delta;
    let radius = general_radius(inst, phi0, delta);
    let spec = DomainSpec::with_radius(inst, radius)?;
    let beta = condition::compute_beta(inst.coefficients());
    let big_r = condition::compute_big_r_theta(inst.exponents(), inst.shift());
    let inv_sym = inverse_symmetry_bound_general(big_r, radius, inst.k(), beta);
    let budget = preliminary_budget(spec.complexity_parameter(), inv_sym);
    let guard = DivergenceGuard { max_iterations: Some((4.0 * budget).ceil() as usize), max_x_norm: None };
    let cfg = RunConfig { target: delta / 2.0, guard, exit_gradient, gap_offset: delta / 2.0 };
    run(&spec, params, SolveMode::General, cfg)
}

/// Solves the GP to precision `δ` when the shift lies in the relative interior
/// of the Newton polytope. The promise is not checked up front; a violation
/// surfaces as a divergence error.
pub fn solve_gp_wc(inst: &GpInstance, params: &SolveParams) -> Result<Solution> {
    params.validate()?;
    wc_run(inst, params, None)
}

/// `r_θ` is unknown in this mode; the divergence guard assumes it is at least
/// this fraction of `R_θ`.
const WC_RELATIVE_R_FLOOR: f64 = 1e-9;

fn wc_run(inst: &GpInstance, params: &SolveParams, exit_gradient: Option<f64>) -> Result<Solution> {
    let spec = DomainSpec::well_conditioned(inst);
    let beta = condition::compute_beta(inst.coefficients());
    let big_r = condition::compute_big_r_theta(inst.exponents(), inst.shift());
    let k = inst.k();
    let r_floor = WC_RELATIVE_R_FLOOR * big_r.max(f64::MIN_POSITIVE);
    let inv_sym = inverse_symmetry_bound_wc(big_r.max(f64::MIN_POSITIVE), r_floor, k, beta);
    let budget = preliminary_budget(spec.complexity_parameter(), inv_sym);
    let guard = DivergenceGuard {
        max_iterations: Some((4.0 * budget).ceil() as usize),
        max_x_norm: Some(value_range_bounds(k, beta).1 / r_floor),
    };
    let cfg = RunConfig { target: params.delta, guard, exit_gradient, gap_offset: 0.0 };
    run(&spec, params, SolveMode::WellConditioned, cfg).map_err(|e| match e {
        Error::PromiseViolation(msg) => Error::PromiseViolation(format!(
            "ill-conditioned instance: the shift does not appear to lie in the relative interior \
             of the Newton polytope ({msg})"
        )),
        e => e,
    })
}

/// Finds `x` with `‖∇F_θ(x)‖₂ ≤ ε` by solving the GP to precision
/// `ε²/(2R_θ²)`. The general mode needs `params.facet_gap_lower`.
pub fn solve_scaling(inst: &GpInstance, params: &SolveParams, mode: SolveMode) -> Result<Solution> {
    let eps = params.epsilon.ok_or_else(|| Error::input("scaling needs a target gradient norm epsilon"))?;
    let mut p = params.clone();
    p.delta = scaling_delta(inst, eps);
    p.validate()?;
    if let Some(fast) = fast_path(inst, &p, mode, eps)? {
        return Ok(fast);
    }
    let solution = match mode {
        SolveMode::WellConditioned => wc_run(inst, &p, Some(eps))?,
        SolveMode::General => {
            let phi0 = p
                .facet_gap_lower
                .ok_or_else(|| Error::input("general scaling needs a facet gap lower bound"))?;
            precheck_shift(inst, phi0)?;
            general_unchecked(inst, &p, phi0, Some(eps))?
        }
    };
    if !(solution.report.gradient_norm <= eps) {
        return Err(Error::Numerical(format!(
            "gradient norm {:.3e} exceeds the target {eps:.3e}",
            solution.report.gradient_norm
        )));
    }
    Ok(solution)
}

/// `δ = ε²/(2R_θ²)`, kept inside `(0, 1)`.
pub fn scaling_delta(inst: &GpInstance, epsilon: f64) -> f64 {
    let big_r = condition::compute_big_r_theta(inst.exponents(), inst.shift());
    if big_r == 0.0 {
        return 0.5;
    }
    (epsilon * epsilon / (2.0 * big_r * big_r)).min(0.5)
}

fn fast_path(inst: &GpInstance, params: &SolveParams, mode: SolveMode, eps: f64) -> Result<Option<Solution>> {
    let x = DVector::zeros(inst.n());
    let (f_theta, grad, _) = inst.evaluate_all(&x)?;
    if grad.norm() > eps {
        return Ok(None);
    }
    let spec = DomainSpec::well_conditioned(inst);
    let report = SolveReport {
        mode,
        f_theta,
        gradient_norm: grad.norm(),
        preliminary_iterations: 0,
        main_iterations: 0,
        iterations: 0,
        certified_gap: f64::NAN,
        eta0: f64::NAN,
        eta_final: f64::NAN,
        nu: spec.complexity_parameter(),
        radius: None,
        subspace_dim: spec.m(),
    };
    let _ = params;
    Ok(Some(Solution { x, point: spec.default_start(), report, trace: IterationTrace::default() }))
}

// ---------------------------------------------------------------------------
// Weak membership

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipAssertion {
    /// `d(θ, conv Ω) ≤ ε`.
    WithinDistance,
    /// `B(θ, ε) ⊄ conv Ω`.
    BallNotContained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakMembership {
    pub assertion: MembershipAssertion,
    /// `‖∇F(x) − θ‖₂` at the returned point, when the solver returned one.
    pub gradient_residual: Option<f64>,
    pub iterations: usize,
    /// Why the solver stopped without a point, if it did.
    pub note: Option<String>,
}

/// Decides weak membership of `θ` in the convex hull of the columns of
/// `points`. Without `facet_gap_lower`, the bit-size bound on the facet gap
/// of the exact rational values of the points is used.
pub fn weak_membership(
    points: &DMatrix<f64>,
    theta: &DVector<f64>,
    epsilon: f64,
    facet_gap_lower: Option<f64>,
) -> Result<WeakMembership> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::input(format!("epsilon must be positive, got {epsilon}")));
    }
    let inst = GpInstance::from_parts(points.clone(), DVector::from_element(points.ncols(), 1.0), theta.clone())?;
    let phi0 = match facet_gap_lower {
        Some(p) if p > 0.0 && p.is_finite() => p,
        Some(p) => return Err(Error::input(format!("facet gap lower bound must be positive, got {p}"))),
        None => {
            let bound = condition::bit_bound_facet_gap(&inst.clone().with_exact_rationals())?;
            let v = bound.value();
            if !(v > 1e-300) {
                return Err(Error::input(format!(
                    "bit-size facet gap bound 2^{} is too small; supply a lower bound",
                    bound.log2
                )));
            }
            v
        }
    };
    let mut params = SolveParams::new(scaling_delta(&inst, epsilon));
    let radius = general_radius(&inst, phi0, params.delta);
    let beta = condition::compute_beta(inst.coefficients());
    let big_r = condition::compute_big_r_theta(points, theta);
    let nu = 2.0 * inst.k() as f64 + 3.0;
    let inv_sym = inverse_symmetry_bound_general(big_r, radius, inst.k(), beta);
    let budget = total_budget(nu, inv_sym, value_range_bounds(inst.k(), beta).1, params.delta / 2.0);
    params.max_iterations = Some(budget.ceil().max(1.0) as usize);

    let residual_ok = |r: f64| r <= epsilon;
    if residual_ok(inst.gradient(&DVector::zeros(inst.n()))?.norm()) {
        return Ok(WeakMembership {
            assertion: MembershipAssertion::WithinDistance,
            gradient_residual: Some(inst.gradient(&DVector::zeros(inst.n()))?.norm()),
            iterations: 0,
            note: None,
        });
    }
    match general_unchecked(&inst, &params, phi0, Some(epsilon)) {
        Ok(sol) => {
            let r = sol.report.gradient_norm;
            Ok(WeakMembership {
                assertion: if residual_ok(r) {
                    MembershipAssertion::WithinDistance
                } else {
                    MembershipAssertion::BallNotContained
                },
                gradient_residual: Some(r),
                iterations: sol.report.iterations,
                note: None,
            })
        }
        Err(e @ Error::Input(_)) => Err(e),
        Err(e) => Ok(WeakMembership {
            assertion: MembershipAssertion::BallNotContained,
            gradient_residual: None,
            iterations: 0,
            note: Some(e.to_string()),
        }),
    }
}
