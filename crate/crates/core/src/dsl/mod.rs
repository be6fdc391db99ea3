//! The small arithmetic language used for metric components, vector fields,
//! scalar potentials and time-dependent parameters.
//!
//! Expressions are parsed against an ordered list of coordinate names; the
//! resulting [`Expr`] is immutable and can be evaluated from any thread.

mod diff;
mod expr;
mod parse;

pub use diff::differentiate;
pub use expr::{BinOp, EvalError, Expr, Func};
pub use parse::{parse, ParseError};
