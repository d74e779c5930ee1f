//! Hot-deck imputation: every unit draws a donor value for `trade` from the
//! smallest surrounding group that has at least five observed values.
//! Draws are fixed by the seed, whatever the thread count.
//!
//! cargo run --example donor_imputation

use std::error::Error;
use std::fs::File;

use rollup::aggregators::AggregationPlan;
use rollup::dsl::{parse_agg_exprs, parse_formula};
use rollup::engine::{saccg, EngineOptions};
use rollup::predicates::min_complete;
use rollup::scheme::scheme_from_formula;
use rollup::table::{read_csv, ReadOptions, Value};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/producers.csv");
    let data = read_csv(File::open(path)?, &ReadOptions::default())?;

    let formula = parse_formula("id ~ sbi * size + sbi + sbi2 + sbi1")?;
    let scheme = scheme_from_formula(&data, &formula)?;
    let plan = AggregationPlan::Named(parse_agg_exprs("donor_trade = sample(trade)")?);
    let test = min_complete(5, &["trade"]);

    let run = |threads| {
        saccg(&data, &scheme, &test, &plan, EngineOptions { seed: 111, threads: Some(threads) })
    };
    let one = run(1)?;
    assert_eq!(one, run(4)?);

    let trade = data.column("trade").expect("trade column");
    let mut filled = 0;
    for (row, result) in one.rows.iter().enumerate() {
        if trade.get(row).is_null() {
            filled += 1;
            if filled <= 10 {
                let donor = match &result.values[0] {
                    Value::Null => "none".to_owned(),
                    v => v.key().into_owned(),
                };
                println!("{} gets {donor} (level {:?})", result.label, result.level);
            }
        }
    }
    println!("{filled} missing values imputed");
    Ok(())
}
