//! Parsers for the three input languages: collapsing formulas
//! (`A * B ~ A * B1 + A`), group-quality rules (`nrow() >= 3; sum(Y >= 2) >= 3`)
//! and named aggregation expressions (`muY = mean(Y)`).
//!
//! Parsing is pure: no table is consulted, so unknown columns surface at
//! evaluation time. The full grammar is documented in `docs/GRAMMAR.md`.

pub mod ast;
pub(crate) mod eval;
mod formula;
mod lexer;
mod parser;

pub use ast::{AggExprList, BinaryOp, Expr, Func, NamedExpr, RuleExpr, UnaryOp};
pub use formula::{parse_formula, CollapseFormula};

use crate::error::ParseError;
use parser::{Dialect, Parser};

/// Parses `;`- or newline-separated rules. Each rule must be a group-level
/// condition.
pub fn parse_rules(text: &str) -> Result<Vec<RuleExpr>, ParseError> {
    Parser::new(text, Dialect::Rules)?.parse_rules()
}

/// Parses `;`- or newline-separated `name = expression` assignments.
pub fn parse_agg_exprs(text: &str) -> Result<AggExprList, ParseError> {
    Parser::new(text, Dialect::Aggregates)?.parse_assignments()
}
