//! Formula language: abstract syntax, parsing, horizons and structural checks.

mod ast;
mod expr;
mod parse;

pub use ast::{Formula, Interval, NegatedFinally, Predicate};
pub use expr::Expr;
pub use parse::parse;
