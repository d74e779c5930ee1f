//! Groups of the small A/B table that hold fewer than three records are
//! merged with their siblings under B1, then under A, before taking means.
//!
//! cargo run --example dynamic_grouping

use std::error::Error;
use std::fs::File;

use rollup::aggregators::{AggregationPlan, AllColumnsFunc};
use rollup::dsl::parse_formula;
use rollup::engine::{saccg, EngineOptions};
use rollup::predicates::min_records;
use rollup::scheme::scheme_from_formula;
use rollup::table::{read_csv, write_csv, ReadOptions, WriteOptions};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/input.csv");
    let data = read_csv(File::open(path)?, &ReadOptions::default())?;

    let scheme = scheme_from_formula(&data, &parse_formula("A*B ~ A*B1 + A")?)?;
    let plan = AggregationPlan::AllColumns {
        func: AllColumnsFunc::Mean,
        na_rm: false,
    };
    let result = saccg(&data, &scheme, &min_records(3), &plan, EngineOptions::default())?;

    for row in &result.rows {
        let level = row.level.map_or("none".to_owned(), |l| l.to_string());
        println!("{} collapsed {} time(s)", row.label, level);
    }
    println!();
    write_csv(&result.to_table(), std::io::stdout(), &WriteOptions::default())?;
    Ok(())
}
