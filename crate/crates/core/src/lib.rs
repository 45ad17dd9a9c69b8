//! Solvers and test problems for variational inequalities arising from
//! smooth two-player games.
//!
//! A game is encoded by its operator `F(ω) = [∇_θ L^(θ)(θ, φ), ∇_φ L^(φ)(θ, φ)]`
//! acting on the stacked iterate `ω = (θ, φ)`, together with a closed convex
//! feasible set `Ω`. A solution is a point `ω* ∈ Ω` with
//! `F(ω*)ᵀ(ω − ω*) ≥ 0` for every feasible `ω`.
//!
//! The crate is split into:
//!
//! * [`point`], [`constraint`], [`field`], [`probe`]: iterates, feasible sets
//!   and their projections, the operator abstraction, and sampled
//!   monotonicity / Lipschitz probes.
//! * [`problems`]: games with known solutions (the rotation game `θ·φ`, a
//!   finite-sum bilinear benchmark, a strongly monotone quadratic, and a 2-D
//!   non-convex GAN).
//! * [`solvers`]: single deterministic steps and the stochastic run loops
//!   (averaged SGD, extragradient, extrapolation from the past, re-used
//!   minibatch extragradient, Extra-Adam and Adam baselines).
//! * [`metrics`]: distance to solution, the restricted saddle-point merit for
//!   bilinear games, geometric rate fitting, and finite-difference checks.

pub mod constraint;
pub mod error;
pub mod field;
pub mod linalg;
pub mod metrics;
pub mod point;
pub mod probe;
pub mod problems;
pub mod rng;
pub mod solvers;

pub use constraint::{project, ConstraintSet, Factor};
pub use error::{Error, Result};
pub use field::{evaluate, evaluate_stochastic, AffineForm, Payoffs, VectorField};
pub use point::Point;
pub use probe::{check_monotone, estimate_lipschitz, ProbeReport};
pub use problems::ProblemInstance;
