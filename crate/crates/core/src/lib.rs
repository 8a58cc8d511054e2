//! Simulation and verification toolkit for impulsive recurrent neural networks
//! with piecewise constant delay.
//!
//! The model is a hybrid dynamical system: between events each unit follows
//!
//! ```text
//! x_i'(t) = -a_i x_i(t) + Σ_j b_ij f_j(x_j(t)) + Σ_j c_ij g_j(x_j(β(t))) + d_i
//! ```
//!
//! where `β(t) = θ_k` on `[θ_k, θ_{k+1})` freezes the delayed argument, and at
//! prescribed moments `τ_k` the state jumps by `Δx_i = I_ik(x_i(τ_k⁻))`.
//! Solutions are right continuous with first-kind discontinuities at the `τ_k`.
//!
//! The crate provides:
//!
//! - [`model`] — network, time-structure and impulse-family types, the
//!   identification function `β`, the vector field, structural validation;
//! - [`hypotheses`] — the derived constants (`k1..k4`, `μ`, `γ`, `λ`, `R`,
//!   `α1`, `α2`) and numeric evaluation of the sufficient conditions H1–H7,
//!   the equilibrium uniqueness condition and condition (A);
//! - [`equilibrium`] — contraction solver for the algebraic equilibrium system;
//! - [`integrator`] — event-aligned RK4 simulation plus a successive
//!   approximation (Picard) oracle on single θ-intervals;
//! - [`periodic`] — the Green's-function operator whose fixed point is the
//!   ω-periodic solution, and the Poincaré criterion;
//! - [`stability`] — decay-bound and λ-inequality verification along
//!   simulated trajectories.
//!
//! All types are immutable after construction and all operations are pure
//! functions of their inputs, so everything is safe to share across threads.
//!
//! Throughout, the state-space norm is the 1-norm `‖u‖ = Σ_i |u_i|` (see
//! [`norm1`]); every bound checked by [`stability`] uses it.

pub mod equilibrium;
pub mod error;
pub mod examples;
pub mod hypotheses;
pub mod integrator;
pub mod model;
pub mod periodic;
pub mod stability;

pub use error::{Error, Result};

/// 1-norm of a vector: `Σ_i |u_i|`.
pub fn norm1(u: &[f64]) -> f64 {
    u.iter().map(|v| v.abs()).sum()
}

/// Sup norm of a vector: `max_i |u_i|`.
pub fn norm_inf(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}
