//! Ratio of industrial turnover to total turnover per activity and size
//! class. Cells with fewer than ten usable records borrow from coarser
//! activity codes.
//!
//! cargo run --example ratio_estimation

use std::error::Error;
use std::fs::File;

use rollup::aggregators::AggregationPlan;
use rollup::dsl::{parse_agg_exprs, parse_formula};
use rollup::engine::{sac, saccg, EngineOptions};
use rollup::predicates::min_complete;
use rollup::scheme::scheme_from_formula;
use rollup::table::{read_csv, ReadOptions};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/producers.csv");
    let data = read_csv(File::open(path)?, &ReadOptions::default())?;

    let scheme = scheme_from_formula(&data, &parse_formula("sbi * size ~ sbi + sbi2 + sbi1")?)?;
    let plan = AggregationPlan::Named(parse_agg_exprs(
        "R = mean(industrial, na_rm) / mean(total, na_rm); used = count_complete(industrial)",
    )?);
    let options = EngineOptions::default();
    let collapsed = saccg(&data, &scheme, &min_complete(10, &["industrial"]), &plan, options)?;
    let plain = sac(&data, &scheme, &plan, options)?;

    println!("{:<10} {:>5} {:>10} {:>10} {:>5}", "cell", "level", "R", "R plain", "used");
    for (c, p) in collapsed.rows.iter().zip(&plain.rows).take(15) {
        let show = |v: &rollup::table::Value| v.as_f64().map_or("NA".into(), |x| format!("{x:.4}"));
        println!(
            "{:<10} {:>5} {:>10} {:>10} {:>5}",
            c.label.to_string(),
            c.level.map_or("-".into(), |l| l.to_string()),
            show(&c.values[0]),
            show(&p.values[0]),
            c.values[1].key(),
        );
    }
    let by_level = |l| collapsed.rows.iter().filter(|r| r.level == Some(l)).count();
    println!("\n{} cells; per level: {:?}", collapsed.rows.len(), (0..=3).map(by_level).collect::<Vec<_>>());
    Ok(())
}
