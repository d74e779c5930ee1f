//! Collapsing schemes: the target grouping plus an ordered sequence of
//! coarsenings, each a function of the previous one.
//!
//! Schemes come from three places:
//!
//! * a formula over columns of the data (`A * B ~ A * B1 + A`), see
//!   [`scheme_from_formula`];
//! * a child-parent table whose first column holds the finest labels and
//!   each further column a coarser one, see [`scheme_from_table`];
//! * a list of hierarchical digit codes, see [`csh_from_digits`].

use std::collections::HashMap;
use std::fmt;

use crate::dsl::CollapseFormula;
use crate::error::{SchemeError, TableError};
use crate::table::{Column, Table, Value, NULL_KEY};

/// Joins component keys of a compound label. Not printable, so it cannot
/// collide with code text.
pub const KEY_SEPARATOR: char = '\u{1f}';

pub(crate) fn display_key(key: &str) -> String {
    key.split(KEY_SEPARATOR)
        .map(|part| if part == NULL_KEY { "NA" } else { part })
        .collect::<Vec<_>>()
        .join("-")
}

pub(crate) fn join_keys<S: AsRef<str>>(parts: &[S]) -> String {
    let mut out = String::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            out.push(KEY_SEPARATOR);
        }
        out.push_str(p.as_ref());
    }
    out
}

/// One target group: the canonical keys of the target grouping variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TargetLabel(Vec<String>);

impl TargetLabel {
    pub fn new<S: Into<String>>(keys: impl IntoIterator<Item = S>) -> TargetLabel {
        TargetLabel(keys.into_iter().map(Into::into).collect())
    }

    pub fn keys(&self) -> &[String] {
        &self.0
    }

    /// Internal form, components joined by [`KEY_SEPARATOR`].
    pub fn canonical(&self) -> String {
        join_keys(&self.0)
    }
}

impl fmt::Display for TargetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&display_key(&self.canonical()))
    }
}

#[derive(Debug, Clone)]
pub struct CollapseScheme {
    target_vars: Vec<String>,
    level_names: Vec<String>,
    /// Data columns the scheme reads; all-columns aggregation skips them.
    grouping_vars: Vec<String>,
    labels: Vec<TargetLabel>,
    /// `level_keys[label][i - 1]` is the coarse key at level `i`.
    level_keys: Vec<Vec<String>>,
    positions: HashMap<TargetLabel, usize>,
}

impl PartialEq for CollapseScheme {
    fn eq(&self, other: &Self) -> bool {
        self.target_vars == other.target_vars
            && self.level_names == other.level_names
            && self.labels == other.labels
            && self.level_keys == other.level_keys
    }
}

impl CollapseScheme {
    pub fn target_vars(&self) -> &[String] {
        &self.target_vars
    }

    pub fn level_names(&self) -> &[String] {
        &self.level_names
    }

    /// Number of coarsening steps.
    pub fn depth(&self) -> usize {
        self.level_names.len()
    }

    pub fn labels(&self) -> &[TargetLabel] {
        &self.labels
    }

    pub fn grouping_vars(&self) -> &[String] {
        &self.grouping_vars
    }

    pub fn position(&self, label: &TargetLabel) -> Option<usize> {
        self.positions.get(label).copied()
    }

    /// Coarse key of `label` at `level` (1-based; level 0 is the label itself).
    pub fn level_key(&self, label: usize, level: usize) -> &str {
        assert!(
            (1..=self.depth()).contains(&level),
            "level {level} outside 1..={}",
            self.depth()
        );
        &self.level_keys[label][level - 1]
    }

    /// Same scheme, but matched against differently named data columns.
    pub fn with_target_vars(mut self, vars: Vec<String>) -> CollapseScheme {
        assert_eq!(vars.len(), self.target_vars.len());
        self.grouping_vars = vars.clone();
        self.target_vars = vars;
        self
    }

    /// Renders the scheme as a child-parent table: one row per label, one
    /// column per level, components of compound keys joined with `-`.
    pub fn to_scheme_table(&self) -> SchemeTable {
        let mut columns = Vec::with_capacity(self.depth() + 1);
        let text = |name: &str, cells: Vec<String>| {
            Column::textual(name, cells.into_iter().map(Some)).expect("valid scheme column")
        };
        columns.push(text(
            &self.target_vars.join("_"),
            self.labels.iter().map(ToString::to_string).collect(),
        ));
        for (i, name) in self.level_names.iter().enumerate() {
            columns.push(text(
                name,
                self.level_keys.iter().map(|k| display_key(&k[i])).collect(),
            ));
        }
        SchemeTable(Table::new(columns).expect("distinct level names"))
    }
}

/// A validated child-parent table: at least two columns, no missing cells,
/// and every value of a column has exactly one parent in the next column.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeTable(Table);

impl SchemeTable {
    pub fn new(table: Table) -> Result<SchemeTable, SchemeError> {
        let columns = table.columns();
        if columns.len() < 2 {
            return Err(SchemeError::TooFewColumns(columns.len()));
        }
        for column in columns {
            if let Some(row) = column.cells().iter().position(Value::is_null) {
                return Err(SchemeError::NullCell {
                    column: column.name().to_owned(),
                    row,
                });
            }
        }
        for pair in columns.windows(2) {
            let mut parent_of: HashMap<String, String> = HashMap::new();
            for (child, parent) in pair[0].cells().iter().zip(pair[1].cells()) {
                let (child, parent) = (child.key().into_owned(), parent.key().into_owned());
                match parent_of.get(&child) {
                    Some(existing) if *existing != parent => {
                        return Err(SchemeError::ChildParent {
                            column: pair[0].name().to_owned(),
                            child,
                            parent: existing.clone(),
                            other_parent: parent,
                        })
                    }
                    Some(_) => {}
                    None => {
                        parent_of.insert(child, parent);
                    }
                }
            }
        }
        Ok(SchemeTable(table))
    }

    pub fn table(&self) -> &Table {
        &self.0
    }

    pub fn into_table(self) -> Table {
        self.0
    }
}

fn nesting_check(
    level_keys: &[Vec<String>],
    depth: usize,
) -> Result<(), SchemeError> {
    for level in 2..=depth {
        let mut parent_of: HashMap<&str, &str> = HashMap::new();
        for keys in level_keys {
            let (child, parent) = (keys[level - 2].as_str(), keys[level - 1].as_str());
            match parent_of.insert(child, parent) {
                Some(existing) if existing != parent => {
                    return Err(SchemeError::NotNested {
                        level,
                        previous: level - 1,
                        child: display_key(child),
                        parent: display_key(existing),
                        other_parent: display_key(parent),
                    })
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// Builds a scheme from a formula over columns of `table`. Labels are the
/// distinct target combinations in order of first occurrence; the key of
/// each alternative is read from the first row of a label and checked
/// against every other row of that label.
pub fn scheme_from_formula(
    table: &Table,
    formula: &CollapseFormula,
) -> Result<CollapseScheme, SchemeError> {
    let resolve = |vars: &[String]| -> Result<Vec<&Column>, TableError> {
        vars.iter().map(|v| table.require_column(v)).collect()
    };
    let target_cols = resolve(&formula.target)?;
    // (variable name, column) for every alternative variable not already
    // part of the target, which are constant within a label by construction.
    let alt_cols = formula
        .alternatives
        .iter()
        .map(|alt| resolve(alt))
        .collect::<Result<Vec<_>, _>>()?;

    let mut labels: Vec<TargetLabel> = Vec::new();
    let mut first_row: Vec<usize> = Vec::new();
    let mut positions: HashMap<TargetLabel, usize> = HashMap::new();
    let checked: Vec<(&String, &Column)> = {
        let mut seen: Vec<&String> = Vec::new();
        formula
            .alternatives
            .iter()
            .flatten()
            .zip(alt_cols.iter().flatten().copied())
            .filter(|(name, _)| {
                let fresh = !formula.target.contains(name) && !seen.contains(name);
                seen.push(name);
                fresh
            })
            .collect()
    };

    for row in 0..table.row_count() {
        let label = TargetLabel(
            target_cols
                .iter()
                .map(|c| c.get(row).key().into_owned())
                .collect(),
        );
        match positions.get(&label) {
            None => {
                positions.insert(label.clone(), labels.len());
                labels.push(label);
                first_row.push(row);
            }
            Some(&pos) => {
                let first = first_row[pos];
                for (name, column) in &checked {
                    let (a, b) = (column.get(first).key(), column.get(row).key());
                    if a != b {
                        return Err(SchemeError::NonFunctional {
                            label: label.to_string(),
                            variable: (*name).clone(),
                            first: display_key(&a),
                            other: display_key(&b),
                        });
                    }
                }
            }
        }
    }

    let level_keys: Vec<Vec<String>> = first_row
        .iter()
        .map(|&row| {
            alt_cols
                .iter()
                .map(|cols| {
                    let parts: Vec<_> = cols.iter().map(|c| c.get(row).key()).collect();
                    join_keys(&parts)
                })
                .collect()
        })
        .collect();
    let depth = formula.alternatives.len();
    nesting_check(&level_keys, depth)?;

    Ok(CollapseScheme {
        target_vars: formula.target.clone(),
        grouping_vars: formula.variables().into_iter().map(str::to_owned).collect(),
        level_names: formula.alternatives.iter().map(|a| a.join("_")).collect(),
        labels,
        level_keys,
        positions,
    })
}

/// Builds a single-variable scheme from a child-parent table. Duplicate
/// rows are dropped; the target variable is named after the first column.
pub fn scheme_from_table(scheme_table: &SchemeTable) -> CollapseScheme {
    let table = scheme_table.table();
    let columns = table.columns();
    let mut labels = Vec::new();
    let mut level_keys = Vec::new();
    let mut positions = HashMap::new();
    for row in 0..table.row_count() {
        let label = TargetLabel(vec![columns[0].get(row).key().into_owned()]);
        if positions.contains_key(&label) {
            continue;
        }
        positions.insert(label.clone(), labels.len());
        labels.push(label);
        level_keys.push(
            columns[1..]
                .iter()
                .map(|c| c.get(row).key().into_owned())
                .collect(),
        );
    }
    CollapseScheme {
        target_vars: vec![columns[0].name().to_owned()],
        grouping_vars: vec![columns[0].name().to_owned()],
        level_names: columns[1..].iter().map(|c| c.name().to_owned()).collect(),
        labels,
        level_keys,
        positions,
    }
}

/// Derives a child-parent table from hierarchical digit codes. Column `A0`
/// holds the codes as given; column `Ai` truncates every code to
/// `max_len - i` characters (never below one), where `max_len` is the
/// length of the longest code. Codes already that short are copied, which
/// pads shallow branches of an unbalanced hierarchy with copies of their
/// leaves.
pub fn csh_from_digits<S: AsRef<str>>(
    codes: &[S],
    levels: usize,
) -> Result<SchemeTable, SchemeError> {
    if levels == 0 {
        return Err(SchemeError::InvalidCodes("levels must be at least 1".into()));
    }
    if codes.is_empty() {
        return Err(SchemeError::InvalidCodes("no codes given".into()));
    }
    if let Some(i) = codes.iter().position(|c| c.as_ref().is_empty()) {
        return Err(SchemeError::InvalidCodes(format!("code {} is empty", i + 1)));
    }
    let max_len = codes
        .iter()
        .map(|c| c.as_ref().chars().count())
        .max()
        .unwrap_or(0);
    let mut columns = Vec::with_capacity(levels + 1);
    for level in 0..=levels {
        let keep = max_len.saturating_sub(level).max(1);
        let cells = codes
            .iter()
            .map(|c| Some(c.as_ref().chars().take(keep).collect::<String>()));
        columns.push(Column::textual(format!("A{level}"), cells)?);
    }
    SchemeTable::new(Table::new(columns)?)
}

/// Notes about a digit scheme that callers may want to surface: top-level
/// codes of unequal length mean some branches never meet.
pub fn digit_scheme_notes(scheme_table: &SchemeTable) -> Vec<String> {
    let table = scheme_table.table();
    let Some(top) = table.columns().last() else {
        return Vec::new();
    };
    let mut roots: Vec<String> = Vec::new();
    for v in top.cells() {
        let key = v.key().into_owned();
        if !roots.contains(&key) {
            roots.push(key);
        }
    }
    let lengths: Vec<usize> = roots.iter().map(|r| r.chars().count()).collect();
    let (min, max) = (
        lengths.iter().min().copied().unwrap_or(0),
        lengths.iter().max().copied().unwrap_or(0),
    );
    if min == max {
        return Vec::new();
    }
    vec![format!(
        "top level `{}` mixes code lengths {min}..{max}: codes differ in depth by more than the \
         number of levels and stay in separate groups ({})",
        top.name(),
        roots.join(", ")
    )]
}

impl From<SchemeTable> for Table {
    fn from(s: SchemeTable) -> Table {
        s.0
    }
}
