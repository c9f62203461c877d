//! Subcommands. Each returns the JSON document to print on success.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gpcond::condition::{self, FacetLimits};
use gpcond::ipm::{self, SolveMode, SolveParams};
use gpcond::reductions::{self, ScalingConvention, ScalingProblem};
use nalgebra::DVector;
use serde_json::{json, Value};

use crate::format::{parse_vector, InstanceFile, MatrixFile};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "gpcond", version, about = "Condition-aware interior-point solver for unconstrained geometric programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize F_θ(x) = log Σ q_i e^{⟨ω_i − θ, x⟩} to additive accuracy δ.
    Solve(SolveArgs),
    /// Find x with ‖∇F_θ(x)‖ ≤ ε, or scale/balance a matrix.
    Scale(ScaleArgs),
    /// Report condition measures of an instance.
    Condition(ConditionArgs),
    /// Decide weak membership of θ in the convex hull of the exponents.
    Membership(MembershipArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    /// Lower bound on the facet gap; selects the general solver.
    #[arg(long, conflicts_with = "well_conditioned", required_unless_present = "well_conditioned")]
    pub phi0: Option<f64>,
    /// Assume θ lies in the relative interior.
    #[arg(long)]
    pub well_conditioned: bool,
    /// Write the iteration trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleMode {
    MatrixScaling,
    MatrixBalancing,
    Gp,
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    /// Instance file (gp mode) or matrix file (dense JSON or triplets).
    pub input: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = ScaleMode::MatrixScaling)]
    pub mode: ScaleMode,
    /// Lower bound on the facet gap; selects the general solver.
    #[arg(long)]
    pub phi0: Option<f64>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConditionArgs {
    pub instance: PathBuf,
    /// Include the facet list.
    #[arg(long)]
    pub facets: bool,
}

#[derive(Debug, Args)]
pub struct MembershipArgs {
    /// Instance file; its exponents are the points.
    pub instance: PathBuf,
    /// Comma-separated point to test; defaults to the file's shift.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub phi0: Option<f64>,
}

pub fn run(cli: &Cli) -> Result<Value, CliError> {
    match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Scale(a) => scale(a),
        Command::Condition(a) => condition(a),
        Command::Membership(a) => membership(a),
    }
}

fn write_trace(path: Option<&Path>, solution: &ipm::Solution) -> Result<(), CliError> {
    if let Some(p) = path {
        fs::write(p, solution.trace.to_csv()).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn mode_name(mode: SolveMode) -> &'static str {
    match mode {
        SolveMode::General => "general",
        SolveMode::WellConditioned => "well-conditioned",
    }
}

pub fn solve(a: &SolveArgs) -> Result<Value, CliError> {
    let inst = InstanceFile::read(&a.instance)?.to_instance()?;
    let mut params = SolveParams::new(a.delta);
    if a.trace.is_some() {
        params = params.with_trace();
    }
    let solution = match a.phi0 {
        Some(phi0) => ipm::solve_gp_general(&inst, &params.with_facet_gap_lower(phi0))?,
        None => ipm::solve_gp_wc(&inst, &params)?,
    };
    write_trace(a.trace.as_deref(), &solution)?;
    let r = &solution.report;
    Ok(json!({
        "x": solution.x.as_slice(),
        "F_theta": r.f_theta,
        "certified_gap": r.certified_gap,
        "iterations": r.iterations,
        "mode": mode_name(r.mode),
        "gradient_norm": r.gradient_norm,
        "preliminary_iterations": r.preliminary_iterations,
        "main_iterations": r.main_iterations,
    }))
}

pub fn scale(a: &ScaleArgs) -> Result<Value, CliError> {
    let mut params = SolveParams::new(0.5).with_epsilon(a.epsilon);
    if a.trace.is_some() {
        params = params.with_trace();
    }
    let mode = match a.phi0 {
        Some(phi0) => {
            params = params.with_facet_gap_lower(phi0);
            SolveMode::General
        }
        None => SolveMode::WellConditioned,
    };
    match a.mode {
        ScaleMode::Gp => {
            let inst = InstanceFile::read(&a.input)?.to_instance()?;
            let solution = ipm::solve_scaling(&inst, &params, mode)?;
            write_trace(a.trace.as_deref(), &solution)?;
            Ok(json!({
                "x": solution.x.as_slice(),
                "gradient_norm": solution.report.gradient_norm,
                "F_theta": solution.report.f_theta,
                "iterations": solution.report.iterations,
                "mode": mode_name(mode),
            }))
        }
        ScaleMode::MatrixScaling => {
            let file = MatrixFile::read(&a.input)?;
            let (r, c) = file.matrix.shape();
            let sp = ScalingProblem::new(
                file.matrix.clone(),
                file.row_targets.unwrap_or_else(|| DVector::from_element(r, 1.0 / r as f64)),
                file.col_targets.unwrap_or_else(|| DVector::from_element(c, 1.0 / c as f64)),
            )?;
            let inst = reductions::matrix_scaling_instance(&sp)?;
            let solution = ipm::solve_scaling(&inst, &params, mode)?;
            write_trace(a.trace.as_deref(), &solution)?;
            let res = reductions::extract_scaling(&sp, &solution.x, ScalingConvention::Sum)?;
            let total = res.scaled.sum();
            Ok(json!({
                "L": res.left.as_slice(),
                "R": res.right.as_slice(),
                "row_sums": (res.scaled.column_sum() / total).as_slice(),
                "col_sums": (res.scaled.row_sum().transpose() / total).as_slice(),
                "residual": res.residual,
                "gradient_norm": solution.report.gradient_norm,
                "iterations": solution.report.iterations,
                "mode": mode_name(mode),
            }))
        }
        ScaleMode::MatrixBalancing => {
            let file = MatrixFile::read(&a.input)?;
            let inst = reductions::matrix_balancing_instance(&file.matrix)?;
            let solution = ipm::solve_scaling(&inst, &params, mode)?;
            write_trace(a.trace.as_deref(), &solution)?;
            let res = reductions::extract_balancing(&file.matrix, &solution.x)?;
            let total = res.balanced.sum();
            Ok(json!({
                "D": res.scaling.as_slice(),
                "row_sums": (res.balanced.column_sum() / total).as_slice(),
                "col_sums": (res.balanced.row_sum().transpose() / total).as_slice(),
                "imbalance": res.imbalance,
                "gradient_norm": solution.report.gradient_norm,
                "iterations": solution.report.iterations,
                "mode": mode_name(mode),
            }))
        }
    }
}

pub fn condition(a: &ConditionArgs) -> Result<Value, CliError> {
    let inst = InstanceFile::read(&a.instance)?.to_instance()?;
    let (report, polytope) = condition::condition_report(&inst, FacetLimits::default());
    let mut out = serde_json::to_value(&report).expect("report serialization");
    if report.facets_skipped {
        out["r_theta"] = json!("skipped (size guard)");
        out["facet_gap"] = json!("skipped (size guard)");
    }
    if a.facets {
        out["facets"] = match &polytope {
            Some(p) => serde_json::to_value(p.facets()).expect("facet serialization"),
            None if report.facets_skipped => json!("skipped (size guard)"),
            None => json!([]),
        };
    }
    if let Ok(r) = condition::bit_bound_r_theta(&inst) {
        let mut bounds = json!({ "r_theta_log2": r.log2 });
        if let Ok(phi) = condition::bit_bound_facet_gap(&inst) {
            bounds["facet_gap_log2"] = json!(phi.log2);
        }
        if let Ok(ufc) = condition::bit_bound_ufc(&inst) {
            bounds["ufc_log2"] = json!(ufc.log2);
        }
        out["bit_bounds"] = bounds;
    }
    Ok(out)
}

pub fn membership(a: &MembershipArgs) -> Result<Value, CliError> {
    let inst = InstanceFile::read(&a.instance)?.to_instance()?;
    let theta = match &a.theta {
        Some(s) => DVector::from_vec(parse_vector(s)?),
        None => inst.shift().clone(),
    };
    let verdict = ipm::weak_membership(inst.exponents(), &theta, a.epsilon, a.phi0)?;
    Ok(serde_json::to_value(&verdict).expect("verdict serialization"))
}
