//! Random test corpus and a linear-scan reference implementation of the
//! collapsing aggregation. The reference reads coarse keys straight off
//! each row and never builds an index.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rollup::table::{Column, Table, Value};

/// Alternatives to pick collapse levels from, finest first. Each list is
/// nested: every entry is a function of the one before.
const LADDERS: [&[&[&str]]; 3] = [
    &[&["g1", "g2"], &["g1"], &["one"]],
    &[&["g1", "g2"], &["h"], &["one"]],
    &[&["g2", "g1", "g3"], &["g2"], &["one"]],
];

pub const TARGET: [&str; 3] = ["g1", "g2", "g3"];

#[derive(Debug, Clone)]
pub struct Case {
    pub table: Table,
    pub formula: String,
    pub alternatives: Vec<Vec<&'static str>>,
}

impl Case {
    pub fn depth(&self) -> usize {
        self.alternatives.len()
    }
}

/// Table with grouping columns g1..g3 (at most 4 values each), h = g1 mod 2,
/// a constant `one`, and a value column `y` with about 20% missing.
pub fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let rows = rng.random_range(1..=50);
    let cardinality: Vec<u32> = (0..3).map(|_| rng.random_range(1..=4)).collect();
    let mut g = vec![Vec::new(); 3];
    let mut y = Vec::new();
    for _ in 0..rows {
        for (k, col) in g.iter_mut().enumerate() {
            col.push(f64::from(rng.random_range(0..cardinality[k])));
        }
        y.push(if rng.random_bool(0.2) {
            None
        } else {
            Some(f64::from(rng.random_range(0..10u32)))
        });
    }
    let h: Vec<f64> = g[0].iter().map(|x| x % 2.0).collect();
    let table = Table::new(vec![
        Column::numeric("g1", g[0].iter().copied().map(Some)).unwrap(),
        Column::numeric("g2", g[1].iter().copied().map(Some)).unwrap(),
        Column::numeric("g3", g[2].iter().copied().map(Some)).unwrap(),
        Column::numeric("h", h.into_iter().map(Some)).unwrap(),
        Column::numeric("one", (0..rows).map(|_| Some(1.0))).unwrap(),
        Column::numeric("y", y).unwrap(),
    ])
    .unwrap();
    let ladder = LADDERS[rng.random_range(0..LADDERS.len())];
    let depth = rng.random_range(1..=3);
    let alternatives: Vec<Vec<&str>> = ladder[..depth].iter().map(|a| a.to_vec()).collect();
    let formula = format!(
        "{} ~ {}",
        TARGET.join(" * "),
        alternatives
            .iter()
            .map(|a| a.join(" * "))
            .collect::<Vec<_>>()
            .join(" + ")
    );
    Case {
        table,
        formula,
        alternatives,
    }
}

/// The fixed corpus used by the acceptance criteria.
pub fn corpus(size: usize) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    (0..size).map(|_| random_case(&mut rng)).collect()
}

fn cell(table: &Table, name: &str, row: usize) -> Option<f64> {
    match table.column(name).unwrap().get(row) {
        Value::Number(x) => Some(*x),
        Value::Null => None,
        Value::Text(t) => panic!("unexpected text {t}"),
    }
}

fn key(table: &Table, vars: &[&str], row: usize) -> Vec<Option<f64>> {
    vars.iter().map(|v| cell(table, v, row)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub label: Vec<Option<f64>>,
    pub level: Option<usize>,
    pub values: Vec<Value>,
}

/// Reference collapsing aggregation. `test` and `aggregate` see the row
/// positions of the candidate group in table order.
pub fn oracle(
    table: &Table,
    target: &[&str],
    alternatives: &[Vec<&str>],
    test: impl Fn(&[usize]) -> bool,
    aggregate: impl Fn(&[usize]) -> Vec<Value>,
    width: usize,
) -> Vec<OracleRow> {
    let n = table.row_count();
    let mut firsts: Vec<usize> = Vec::new();
    for row in 0..n {
        if !firsts.iter().any(|&f| key(table, target, f) == key(table, target, row)) {
            firsts.push(row);
        }
    }
    firsts
        .into_iter()
        .map(|first| {
            let label = key(table, target, first);
            for level in 0..=alternatives.len() {
                let vars: &[&str] = if level == 0 {
                    target
                } else {
                    &alternatives[level - 1]
                };
                let wanted = key(table, vars, first);
                let rows: Vec<usize> =
                    (0..n).filter(|&r| key(table, vars, r) == wanted).collect();
                if test(&rows) {
                    return OracleRow {
                        label,
                        level: Some(level),
                        values: aggregate(&rows),
                    };
                }
            }
            OracleRow {
                label,
                level: None,
                values: vec![Value::Null; width],
            }
        })
        .collect()
}

/// Reference for the plan `n = nrow(); s = sum(y, na_rm); m = mean(y); c = count_complete(y)`.
pub const ORACLE_PLAN: &str = "n = nrow(); s = sum(y, na_rm); m = mean(y); c = count_complete(y)";

pub fn oracle_aggregate(table: &Table, rows: &[usize]) -> Vec<Value> {
    let ys: Vec<Option<f64>> = rows.iter().map(|&r| cell(table, "y", r)).collect();
    let present: Vec<f64> = ys.iter().flatten().copied().collect();
    let mean = if present.len() == ys.len() && !ys.is_empty() {
        Value::Number(present.iter().sum::<f64>() / present.len() as f64)
    } else {
        Value::Null
    };
    vec![
        Value::Number(rows.len() as f64),
        Value::Number(present.iter().sum()),
        mean,
        Value::Number(present.len() as f64),
    ]
}

/// Result rows flattened to the oracle's shape.
pub fn flatten(result: &rollup::engine::ResultTable) -> Vec<OracleRow> {
    result
        .rows
        .iter()
        .map(|r| OracleRow {
            label: r.label_values.iter().map(Value::as_f64).collect(),
            level: r.level,
            values: r.values.clone(),
        })
        .collect()
}
