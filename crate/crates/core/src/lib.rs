//! Grouped aggregation where groups that fail a quality test are merged
//! into coarser groups, step by step, until the test passes.
//!
//! The pieces:
//!
//! * [`table`]: nullable typed columns, CSV in and out, row-subset views.
//! * [`dsl`]: parsers for collapse formulas, group rules and aggregate
//!   expressions.
//! * [`scheme`]: collapsing schemes from formulas, child-parent tables or
//!   digit codes.
//! * [`predicates`]: group-quality tests and the smoke test.
//! * [`aggregators`]: built-in aggregates and expression evaluation.
//! * [`engine`]: plain split-apply-combine and the collapsing variant.
//! * [`cli`]: the `rollup` command line.

pub mod aggregators;
pub mod cli;
pub mod engine;
pub mod dsl;
pub mod error;
pub mod predicates;
pub mod scheme;
pub mod table;

/// Name of the output column holding the collapse level.
pub const LEVEL_COLUMN: &str = "level";
