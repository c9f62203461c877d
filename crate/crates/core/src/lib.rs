//! Interior-point methods for unconstrained geometric programs, together with
//! the geometric condition measures that govern their iteration counts.
//!
//! The objective is the shifted log-sum-exp function
//!
//! ```text
//! F_θ(x) = log Σ_i q_i exp(⟨ω_i − θ, x⟩)
//! ```
//!
//! over exponents `ω_1..ω_k ∈ ℝⁿ`, positive coefficients `q` and a shift `θ`.
//! Two path-following solvers are provided: [`ipm::solve_gp_wc`] for shifts in
//! the relative interior of the Newton polytope `conv Ω`, and
//! [`ipm::solve_gp_general`] for any shift in the polytope given a lower bound
//! on the facet gap. Both reduce the program to minimizing a linear function
//! over a convex domain with an explicit self-concordant barrier
//! ([`barrier`]).
//!
//! The [`condition`] module computes the quantities that appear in the
//! iteration bounds (distance to the boundary, enclosing radius, coefficient
//! spread, facet gap) by brute-force facet enumeration, plus a-priori bounds
//! from encoding lengths and total unimodularity. [`reductions`] builds
//! instances for matrix scaling, matrix balancing and graph programs and maps
//! solver output back to those settings.

pub mod barrier;
pub mod condition;
pub mod error;
pub mod instance;
pub mod ipm;
mod linalg;
pub mod rational;
pub mod reductions;

pub use error::{Error, Result};
pub use instance::{GpInstance, SubspaceBasis};
