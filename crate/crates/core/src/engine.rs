//! Split-apply-combine, plain and with collapsing groups.
//!
//! [`build_index`] materializes the row sets once: the rows of every target
//! label, and for each collapse level the merged rows of every fiber (the
//! labels sharing a coarse key). The per-label loop then only looks up
//! precomputed slices.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::aggregators::{eval_agg, group_seed, AggregationPlan};
use crate::error::{EngineError, TableError};
use crate::predicates::{TestOutcome, TestPredicate};
use crate::scheme::{CollapseScheme, TargetLabel};
use crate::table::{Column, ColumnKind, RowSubset, Table, Value};
use crate::LEVEL_COLUMN;

#[derive(Debug, Clone)]
struct Fiber {
    labels: Vec<usize>,
    rows: Vec<usize>,
}

#[derive(Debug, Clone)]
struct LevelIndex {
    keys: HashMap<String, usize>,
    fibers: Vec<Fiber>,
    /// Fiber of each scheme label; only meaningful for active labels.
    fiber_of: Vec<usize>,
}

/// Row positions per target label and per collapsed group.
#[derive(Debug, Clone)]
pub struct GroupIndex {
    label_rows: Vec<Vec<usize>>,
    active: Vec<usize>,
    levels: Vec<LevelIndex>,
    excluded_rows: usize,
}

impl GroupIndex {
    /// Scheme positions of labels that occur in the data, in scheme order.
    pub fn active_labels(&self) -> &[usize] {
        &self.active
    }

    /// Rows of the label at scheme position `label`.
    pub fn label_rows(&self, label: usize) -> &[usize] {
        &self.label_rows[label]
    }

    /// Rows of the group `label` belongs to after `level` collapses.
    pub fn rows_at(&self, label: usize, level: usize) -> &[usize] {
        if level == 0 {
            return &self.label_rows[label];
        }
        let index = &self.levels[level - 1];
        &index.fibers[index.fiber_of[label]].rows
    }

    /// Active labels sharing the coarse `key` at `level` (1-based).
    pub fn fiber(&self, level: usize, key: &str) -> Option<&[usize]> {
        let index = self.levels.get(level.checked_sub(1)?)?;
        index.keys.get(key).map(|&f| index.fibers[f].labels.as_slice())
    }

    /// Rows whose key matches no label of the scheme.
    pub fn excluded_rows(&self) -> usize {
        self.excluded_rows
    }
}

/// Indexes `table` by the scheme's target variables. Rows whose label is
/// not in the scheme are left out and counted.
pub fn build_index(table: &Table, scheme: &CollapseScheme) -> Result<GroupIndex, EngineError> {
    let key_columns = scheme
        .target_vars()
        .iter()
        .map(|v| table.require_column(v))
        .collect::<Result<Vec<&Column>, TableError>>()?;

    let mut label_rows = vec![Vec::new(); scheme.labels().len()];
    let mut excluded_rows = 0;
    for row in 0..table.row_count() {
        let label = TargetLabel::new(key_columns.iter().map(|c| c.get(row).key().into_owned()));
        match scheme.position(&label) {
            Some(pos) => label_rows[pos].push(row),
            None => excluded_rows += 1,
        }
    }
    let active: Vec<usize> = (0..label_rows.len())
        .filter(|&l| !label_rows[l].is_empty())
        .collect();

    let levels = (1..=scheme.depth())
        .map(|level| {
            let mut keys = HashMap::new();
            let mut fibers: Vec<Fiber> = Vec::new();
            let mut fiber_of = vec![usize::MAX; label_rows.len()];
            for &label in &active {
                let key = scheme.level_key(label, level);
                let f = *keys.entry(key.to_owned()).or_insert_with(|| {
                    fibers.push(Fiber {
                        labels: Vec::new(),
                        rows: Vec::new(),
                    });
                    fibers.len() - 1
                });
                fibers[f].labels.push(label);
                fibers[f].rows.extend_from_slice(&label_rows[label]);
                fiber_of[label] = f;
            }
            for fiber in &mut fibers {
                fiber.rows.sort_unstable();
            }
            LevelIndex {
                keys,
                fibers,
                fiber_of,
            }
        })
        .collect();

    Ok(GroupIndex {
        label_rows,
        active,
        levels,
        excluded_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EngineOptions {
    /// Global seed for random aggregates.
    pub seed: u64,
    /// Worker threads; `None` uses all available cores.
    pub threads: Option<usize>,
}

/// Outcome for one label with a generic aggregate value.
#[derive(Debug, Clone, PartialEq)]
pub struct Collapsed<X> {
    /// Scheme position of the label.
    pub label: usize,
    /// Collapse level at which the test passed; `None` if it never did.
    pub level: Option<usize>,
    pub value: Option<X>,
}

fn run_labels<T, F>(labels: &[usize], threads: Option<usize>, f: F) -> Result<Vec<T>, EngineError>
where
    T: Send,
    F: Fn(usize) -> Result<T, EngineError> + Sync,
{
    if threads == Some(1) {
        return labels.iter().map(|&l| f(l)).collect();
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| EngineError::ThreadPool(e.to_string()))?;
    // collecting into Result keeps label order and reports the first error
    // in that order, whatever order the workers finish in
    let results: Vec<Result<T, EngineError>> =
        pool.install(|| labels.par_iter().map(|&l| f(l)).collect());
    results.into_iter().collect()
}

/// The collapsing loop with an arbitrary aggregate `phi`. For each label:
/// test its own rows, and while the test fails and levels remain, move to
/// the rows of the next coarser group. The test runs at most `depth + 1`
/// times per label.
pub fn collapse_apply<X, F>(
    table: &Table,
    scheme: &CollapseScheme,
    index: &GroupIndex,
    predicate: &TestPredicate,
    threads: Option<usize>,
    phi: F,
) -> Result<Vec<Collapsed<X>>, EngineError>
where
    X: Send,
    F: Fn(usize, &RowSubset<'_>) -> Result<X, EngineError> + Sync,
{
    let depth = scheme.depth();
    run_labels(index.active_labels(), threads, |label| {
        let mut level = 0;
        loop {
            let d = RowSubset::from_sorted(table, index.rows_at(label, level));
            match predicate.eval(&d) {
                TestOutcome::Pass => {
                    return Ok(Collapsed {
                        label,
                        level: Some(level),
                        value: Some(phi(label, &d)?),
                    })
                }
                TestOutcome::Fail if level < depth => level += 1,
                TestOutcome::Fail => {
                    return Ok(Collapsed {
                        label,
                        level: None,
                        value: None,
                    })
                }
                TestOutcome::Indeterminate(reason) => {
                    return Err(EngineError::Indeterminate {
                        label: scheme.labels()[label].to_string(),
                        level,
                        reason,
                    })
                }
                TestOutcome::Error(message) => {
                    return Err(EngineError::Predicate {
                        label: scheme.labels()[label].to_string(),
                        level,
                        message,
                    })
                }
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub label: TargetLabel,
    /// Cells of the target variables, taken from the label's first row.
    pub label_values: Vec<Value>,
    pub level: Option<usize>,
    /// All missing when `level` is `None`.
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub key_vars: Vec<String>,
    pub output_names: Vec<String>,
    pub rows: Vec<ResultRow>,
    /// Input rows that matched no target label.
    pub excluded_rows: usize,
}

fn infer_column(name: &str, cells: Vec<Value>) -> Column {
    let textual = cells.iter().any(|v| matches!(v, Value::Text(_)));
    if textual {
        let cells = cells.into_iter().map(|v| match v {
            Value::Number(_) => Some(v.key().into_owned()),
            Value::Text(s) => Some(s),
            Value::Null => None,
        });
        Column::textual(name, cells)
    } else {
        Column::new(name, ColumnKind::Numeric, cells)
    }
    .expect("output column names are validated by the plan")
}

impl ResultTable {
    /// Key columns, then `level`, then the aggregates.
    pub fn to_table(&self) -> Table {
        let mut columns = Vec::new();
        for (k, name) in self.key_vars.iter().enumerate() {
            columns.push(infer_column(
                name,
                self.rows.iter().map(|r| r.label_values[k].clone()).collect(),
            ));
        }
        columns.push(
            Column::numeric(
                LEVEL_COLUMN,
                self.rows.iter().map(|r| r.level.map(|l| l as f64)),
            )
            .expect("valid name"),
        );
        for (k, name) in self.output_names.iter().enumerate() {
            columns.push(infer_column(
                name,
                self.rows.iter().map(|r| r.values[k].clone()).collect(),
            ));
        }
        Table::with_row_count(columns, self.rows.len()).expect("distinct output names")
    }
}

fn prepare(
    table: &Table,
    scheme: &CollapseScheme,
    plan: &AggregationPlan,
) -> Result<(GroupIndex, Vec<String>), EngineError> {
    plan.validate(table, scheme.grouping_vars())?;
    let index = build_index(table, scheme)?;
    let names = plan.output_names(table, scheme.grouping_vars());
    Ok((index, names))
}

fn aggregate(
    scheme: &CollapseScheme,
    plan: &AggregationPlan,
    seed: u64,
    label: usize,
    d: &RowSubset<'_>,
) -> Result<Vec<Value>, EngineError> {
    let label_seed = group_seed(seed, &scheme.labels()[label].canonical());
    Ok(eval_agg(plan, d, scheme.grouping_vars(), label_seed)?
        .into_iter()
        .map(|(_, v)| v)
        .collect())
}

fn assemble(
    table: &Table,
    scheme: &CollapseScheme,
    index: &GroupIndex,
    output_names: Vec<String>,
    collapsed: Vec<Collapsed<Vec<Value>>>,
) -> ResultTable {
    let key_columns: Vec<&Column> = scheme
        .target_vars()
        .iter()
        .map(|v| table.column(v).expect("checked by build_index"))
        .collect();
    let width = output_names.len();
    let rows = collapsed
        .into_iter()
        .map(|c| {
            let first = index.label_rows(c.label)[0];
            ResultRow {
                label: scheme.labels()[c.label].clone(),
                label_values: key_columns.iter().map(|col| col.get(first).clone()).collect(),
                level: c.level,
                values: c.value.unwrap_or_else(|| vec![Value::Null; width]),
            }
        })
        .collect();
    ResultTable {
        key_vars: scheme.target_vars().to_vec(),
        output_names,
        rows,
        excluded_rows: index.excluded_rows(),
    }
}

/// Split-apply-combine with collapsing groups: one row per target label
/// found in the data, in scheme order.
pub fn saccg(
    table: &Table,
    scheme: &CollapseScheme,
    predicate: &TestPredicate,
    plan: &AggregationPlan,
    options: EngineOptions,
) -> Result<ResultTable, EngineError> {
    let (index, names) = prepare(table, scheme, plan)?;
    let collapsed = collapse_apply(table, scheme, &index, predicate, options.threads, |label, d| {
        aggregate(scheme, plan, options.seed, label, d)
    })?;
    Ok(assemble(table, scheme, &index, names, collapsed))
}

/// Plain split-apply-combine: each label aggregated over its own rows.
pub fn sac(
    table: &Table,
    scheme: &CollapseScheme,
    plan: &AggregationPlan,
    options: EngineOptions,
) -> Result<ResultTable, EngineError> {
    let (index, names) = prepare(table, scheme, plan)?;
    let collapsed = run_labels(index.active_labels(), options.threads, |label| {
        let d = RowSubset::from_sorted(table, index.label_rows(label));
        Ok(Collapsed {
            label,
            level: Some(0),
            value: Some(aggregate(scheme, plan, options.seed, label, &d)?),
        })
    })?;
    Ok(assemble(table, scheme, &index, names, collapsed))
}
