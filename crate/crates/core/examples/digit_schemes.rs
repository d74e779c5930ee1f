//! Builds a collapse hierarchy from classification codes by cutting one
//! trailing digit per level.
//!
//! cargo run --example digit_schemes

use std::error::Error;
use std::fs::File;

use rollup::scheme::{csh_from_digits, digit_scheme_notes, scheme_from_table};
use rollup::table::{read_csv, write_csv, ReadOptions, WriteOptions};

fn main() -> Result<(), Box<dyn Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data");
    for file in ["nace.csv", "nace_unbalanced.csv"] {
        let codes = read_csv(File::open(format!("{dir}/{file}"))?, &ReadOptions::default())?;
        let keys: Vec<String> = codes.columns()[0]
            .cells()
            .iter()
            .map(|v| v.key().into_owned())
            .collect();

        let csh = csh_from_digits(&keys, 3)?;
        println!("== {file}");
        write_csv(csh.table(), std::io::stdout(), &WriteOptions::default())?;
        for note in digit_scheme_notes(&csh) {
            println!("note: {note}");
        }
        let scheme = scheme_from_table(&csh);
        println!("{} labels, depth {}\n", scheme.labels().len(), scheme.depth());
    }
    Ok(())
}
