//! Checks a test against degenerate inputs before using it: the full
//! table, zero rows, and each column blanked out in turn.
//!
//! cargo run --example smoke_test

use std::error::Error;
use std::fs::File;

use rollup::predicates::{min_records, parse_test_spec, smoke_test, TestOutcome, TestPredicate};
use rollup::table::{read_csv, ReadOptions};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/input.csv");
    let data = read_csv(File::open(path)?, &ReadOptions::default())?;

    // panics inside a test are reported as errors; keep the default hook
    // from printing them as well
    std::panic::set_hook(Box::new(|_| {}));

    let robust = min_records(3);
    let fragile = parse_test_spec("nrow() >= 3; sum(Y >= 2) >= 3")?;
    let panicky = TestPredicate::new("first Y is positive", |d| {
        let y = d.base().column("Y").expect("Y exists");
        if y.get(d.rows()[0]).as_f64().expect("Y present") > 0.0 {
            TestOutcome::Pass
        } else {
            TestOutcome::Fail
        }
    });

    for (name, test) in [("min_records(3)", &robust), ("rules", &fragile), ("native", &panicky)] {
        let report = smoke_test(&data, test);
        let verdict = if report.has_issues() { "issues" } else { "clean" };
        println!("== {name}: {verdict}");
        print!("{}", report.render_issues());
    }
    Ok(())
}
