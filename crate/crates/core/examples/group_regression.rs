//! A straight-line fit of `total` on `industrial` per activity code, with
//! small groups pooled upward. `ols` yields two output columns.
//!
//! cargo run --example group_regression

use std::error::Error;
use std::fs::File;

use rollup::aggregators::AggregationPlan;
use rollup::dsl::{parse_agg_exprs, parse_formula};
use rollup::engine::{saccg, EngineOptions};
use rollup::predicates::parse_test_spec;
use rollup::scheme::scheme_from_formula;
use rollup::table::{read_csv, write_csv, ReadOptions, WriteOptions};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/producers.csv");
    let data = read_csv(File::open(path)?, &ReadOptions::default())?;

    let scheme = scheme_from_formula(&data, &parse_formula("sbi ~ sbi2 + sbi1")?)?;
    let test = parse_test_spec("min_complete(8, total, industrial)")?;
    let plan = AggregationPlan::Named(parse_agg_exprs("fit = ols(total, industrial); n = nrow()")?);
    let result = saccg(&data, &scheme, &test, &plan, EngineOptions::default())?;

    println!("outputs: {:?}", result.output_names);
    write_csv(&result.to_table(), std::io::stdout(), &WriteOptions::default())?;
    Ok(())
}
