//! The same collapsing as `dynamic_grouping`, but driven by a child-parent
//! table instead of a formula. Data rows carry a combined `AB` key.
//!
//! cargo run --example scheme_table

use std::error::Error;
use std::fs::File;

use rollup::aggregators::{AggregationPlan, AllColumnsFunc};
use rollup::engine::{saccg, EngineOptions};
use rollup::predicates::min_records;
use rollup::scheme::{scheme_from_table, SchemeTable};
use rollup::table::{read_csv, write_csv, ReadOptions, WriteOptions};

fn main() -> Result<(), Box<dyn Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    let opts = ReadOptions::default();
    let data = read_csv(File::open(format!("{dir}/input1.csv"))?, &opts)?;
    let csh = SchemeTable::new(read_csv(File::open(format!("{dir}/csh.csv"))?, &opts)?)?;

    let scheme = scheme_from_table(&csh);
    println!("levels: {:?}", scheme.level_names());
    for (i, label) in scheme.labels().iter().enumerate() {
        let parents: Vec<&str> = (1..=scheme.depth()).map(|l| scheme.level_key(i, l)).collect();
        println!("  {label} -> {}", parents.join(" -> "));
    }

    let plan = AggregationPlan::AllColumns {
        func: AllColumnsFunc::Mean,
        na_rm: false,
    };
    let result = saccg(&data, &scheme, &min_records(3), &plan, EngineOptions::default())?;
    println!();
    write_csv(&result.to_table(), std::io::stdout(), &WriteOptions::default())?;

    // a formula scheme can be written out in the same shape
    let back = scheme.to_scheme_table();
    assert_eq!(back.table().row_count(), 6);
    Ok(())
}
