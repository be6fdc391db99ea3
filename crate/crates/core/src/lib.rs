//! Pointwise tensor calculus on Lorentzian metrics given as expression
//! strings, and residual checks for Ricci–Yamabe type solitons on perfect
//! fluid spacetimes.
//!
//! - [`dsl`]: expression grammar, evaluation, symbolic differentiation.
//! - [`geometry`]: metric, Christoffel symbols, curvature, frames and
//!   derivative operators by central differences.
//! - [`spacetime`]: catalog metrics and the perfect fluid model.
//! - [`soliton`]: soliton equations, projections for `Λ` and `μ`, closed
//!   forms, conformal Killing analysis.
//! - [`scenario`] and [`report`]: JSON scenario files and identity reports.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod dsl;
pub mod geometry;
pub mod numerics;
pub mod report;
pub mod scenario;
pub mod soliton;
pub mod spacetime;
