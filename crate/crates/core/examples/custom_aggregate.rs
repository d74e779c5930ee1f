//! The collapsing loop with a hand-written test and an aggregate that is
//! not a row of numbers: here, the sorted list of distinct `B` values seen.
//!
//! cargo run --example custom_aggregate

use std::error::Error;
use std::fs::File;

use rollup::dsl::parse_formula;
use rollup::engine::{build_index, collapse_apply};
use rollup::predicates::{TestOutcome, TestPredicate};
use rollup::scheme::scheme_from_formula;
use rollup::table::{read_csv, ReadOptions};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/input.csv");
    let data = read_csv(File::open(path)?, &ReadOptions::default())?;
    let scheme = scheme_from_formula(&data, &parse_formula("A*B ~ A*B1 + A")?)?;
    let index = build_index(&data, &scheme)?;

    // pass once the group spans at least two B values
    let spread = TestPredicate::new("two distinct B", |d| {
        let b = d.base().column("B").expect("B exists");
        let mut seen: Vec<String> = d.values(b).map(|v| v.key().into_owned()).collect();
        seen.sort();
        seen.dedup();
        if seen.len() >= 2 {
            TestOutcome::Pass
        } else {
            TestOutcome::Fail
        }
    });

    let out = collapse_apply(&data, &scheme, &index, &spread, None, |_, d| {
        let b = d.base().column("B").expect("B exists");
        let mut seen: Vec<String> = d.values(b).map(|v| v.key().into_owned()).collect();
        seen.sort();
        seen.dedup();
        Ok(seen)
    })?;

    for c in out {
        let label = &scheme.labels()[c.label];
        match (c.level, c.value) {
            (Some(level), Some(bs)) => println!("{label}: level {level}, B in {bs:?}"),
            _ => println!("{label}: no level passed"),
        }
    }
    Ok(())
}
