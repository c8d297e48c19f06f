//! Slit Loewner chains and slit holomorphic stochastic flows.
//!
//! A chain is specified by a slit field `b`, a complete field `σ` and a real
//! driving path `u`. Its maps solve `∂_t g_t = −V(t, g_t)` with
//! `V(t,·) = (h_{u_t}^{-1})_* b`, where `h` is the flow of `σ`. Driving by
//! `√κ·B_t` gives the stochastic flow `dG = −b(G)dt + √κ σ(G)∘dB`, of which
//! chordal, radial and dipolar SLE are special cases.

// `!(x > 0.0)` is used on purpose so NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autoflow;
pub mod chain;
pub mod cli;
pub mod conformal;
pub mod driving;
pub mod fields;
pub mod ode;
pub mod reparam;
pub mod stochastic;
pub mod transforms;
