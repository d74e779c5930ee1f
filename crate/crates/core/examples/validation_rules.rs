//! A test written as rules: every rule must hold for a group to be used.
//! Rules see group-level functions and row-level comparisons.
//!
//! cargo run --example validation_rules

use std::error::Error;
use std::fs::File;

use rollup::aggregators::AggregationPlan;
use rollup::dsl::{parse_agg_exprs, parse_formula};
use rollup::engine::{saccg, EngineOptions};
use rollup::predicates::{parse_test_spec, TestOutcome};
use rollup::scheme::scheme_from_formula;
use rollup::table::{read_csv, write_csv, ReadOptions, WriteOptions};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/input.csv");
    let data = read_csv(File::open(path)?, &ReadOptions::default())?;

    let test = parse_test_spec("nrow() >= 3; sum(Y >= 2) >= 3")?;
    println!("test: {}", test.description());
    println!("whole table: {}", test.eval(&data.all_rows()));

    let first_two = [0, 1];
    match test.eval(&data.subset(&first_two)?) {
        TestOutcome::Fail => println!("rows 1-2 are too small"),
        other => println!("rows 1-2: {other}"),
    }

    let scheme = scheme_from_formula(&data, &parse_formula("A*B ~ A*B1 + B1")?)?;
    let plan = AggregationPlan::Named(parse_agg_exprs("n = nrow(); muY = mean(Y)")?);
    let result = saccg(&data, &scheme, &test, &plan, EngineOptions::default())?;
    write_csv(&result.to_table(), std::io::stdout(), &WriteOptions::default())?;

    // a rule that cannot decide stops the run
    let shaky = parse_test_spec("max(Y2) > 12")?;
    let with_missing = data.null_out_column("Y2")?;
    if let Err(e) = saccg(&with_missing, &scheme, &shaky, &plan, EngineOptions::default()) {
        println!("\nwith Y2 missing: {e}");
    }
    Ok(())
}
