//! Immutable tabular data: nullable cells, typed columns, CSV I/O and
//! zero-copy row subsets.

use std::borrow::Cow;
use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};

use crate::error::TableError;

/// Internal rendering of a missing grouping key. Never produced by CSV text.
pub(crate) const NULL_KEY: &str = "\u{0}NA";

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Value {
    #[default]
    Null,
    Number(f64),
    Text(String),
}

impl Value {
    /// Builds a number, normalising NaN and infinities to `Null`.
    pub fn number(x: f64) -> Value {
        if x.is_finite() {
            Value::Number(x)
        } else {
            Value::Null
        }
    }

    pub fn text(s: impl Into<String>) -> Value {
        Value::Text(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            _ => None,
        }
    }

    /// Canonical grouping key: numbers with minimal digits, text verbatim.
    pub fn key(&self) -> Cow<'_, str> {
        match self {
            Value::Null => Cow::Borrowed(NULL_KEY),
            Value::Number(x) => Cow::Owned(canonical_number(*x)),
            Value::Text(s) => Cow::Borrowed(s),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NA"),
            Value::Number(x) => f.write_str(&format_significant(*x, DEFAULT_SIGNIFICANT_DIGITS)),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::number(x)
    }
}

impl From<Option<f64>> for Value {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Value::Null, Value::number)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

/// Shortest decimal rendering that round-trips; `-0` collapses to `0`.
pub(crate) fn canonical_number(x: f64) -> String {
    if x == 0.0 {
        "0".to_owned()
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Textual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    kind: ColumnKind,
    cells: Vec<Value>,
}

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

impl Column {
    pub fn new(
        name: impl Into<String>,
        kind: ColumnKind,
        cells: Vec<Value>,
    ) -> Result<Column, TableError> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(TableError::InvalidName(name));
        }
        for (row, cell) in cells.iter().enumerate() {
            let ok = match (kind, cell) {
                (_, Value::Null) => true,
                (ColumnKind::Numeric, Value::Number(x)) => x.is_finite(),
                (ColumnKind::Textual, Value::Text(_)) => true,
                _ => false,
            };
            if !ok {
                return Err(TableError::KindMismatch { column: name, row });
            }
        }
        Ok(Column { name, kind, cells })
    }

    pub fn numeric<I>(name: impl Into<String>, values: I) -> Result<Column, TableError>
    where
        I: IntoIterator,
        I::Item: Into<Option<f64>>,
    {
        let cells = values
            .into_iter()
            .map(|v| Value::from(v.into()))
            .collect();
        Column::new(name, ColumnKind::Numeric, cells)
    }

    pub fn textual<I, S>(name: impl Into<String>, values: I) -> Result<Column, TableError>
    where
        I: IntoIterator<Item = Option<S>>,
        S: Into<String>,
    {
        let cells = values
            .into_iter()
            .map(|v| v.map_or(Value::Null, |s| Value::Text(s.into())))
            .collect();
        Column::new(name, ColumnKind::Textual, cells)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ColumnKind {
        self.kind
    }

    pub fn cells(&self) -> &[Value] {
        &self.cells
    }

    pub fn get(&self, row: usize) -> &Value {
        &self.cells[row]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// An immutable record set. Every column has `row_count` cells and column
/// names are unique.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    columns: Vec<Column>,
    row_count: usize,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Result<Table, TableError> {
        let row_count = columns.first().map_or(0, Column::len);
        Table::with_row_count(columns, row_count)
    }

    /// Like [`Table::new`] but also fixes the row count, which matters for
    /// tables without columns.
    pub fn with_row_count(columns: Vec<Column>, row_count: usize) -> Result<Table, TableError> {
        let mut seen = HashSet::new();
        for column in &columns {
            if !seen.insert(column.name.as_str()) {
                return Err(TableError::DuplicateColumn(column.name.clone()));
            }
            if column.len() != row_count {
                return Err(TableError::LengthMismatch {
                    column: column.name.clone(),
                    expected: row_count,
                    found: column.len(),
                });
            }
        }
        Ok(Table { columns, row_count })
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(Column::name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn require_column(&self, name: &str) -> Result<&Column, TableError> {
        self.column(name)
            .ok_or_else(|| TableError::UnknownColumn(name.to_owned()))
    }

    /// A view of the rows at `indices`, which must be strictly increasing.
    pub fn subset<'a>(&'a self, indices: &'a [usize]) -> Result<RowSubset<'a>, TableError> {
        for (i, &row) in indices.iter().enumerate() {
            if row >= self.row_count {
                return Err(TableError::RowOutOfBounds {
                    row,
                    row_count: self.row_count,
                });
            }
            if i > 0 && indices[i - 1] >= row {
                return Err(TableError::UnorderedRows { position: i });
            }
        }
        Ok(RowSubset {
            base: self,
            rows: Cow::Borrowed(indices),
        })
    }

    pub fn all_rows(&self) -> RowSubset<'_> {
        RowSubset {
            base: self,
            rows: Cow::Owned((0..self.row_count).collect()),
        }
    }

    pub fn no_rows(&self) -> RowSubset<'_> {
        RowSubset {
            base: self,
            rows: Cow::Borrowed(&[]),
        }
    }

    /// Copy of the table with every cell of `name` set to `Null`.
    pub fn null_out_column(&self, name: &str) -> Result<Table, TableError> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| TableError::UnknownColumn(name.to_owned()))?;
        let mut columns = self.columns.clone();
        columns[idx].cells = vec![Value::Null; self.row_count];
        Ok(Table {
            columns,
            row_count: self.row_count,
        })
    }
}

/// A borrowed, ordered selection of rows of a [`Table`]. Cell data is never
/// copied.
#[derive(Debug, Clone)]
pub struct RowSubset<'a> {
    base: &'a Table,
    rows: Cow<'a, [usize]>,
}

impl<'a> RowSubset<'a> {
    /// Caller guarantees `rows` is strictly increasing and in bounds.
    pub(crate) fn from_sorted(base: &'a Table, rows: &'a [usize]) -> RowSubset<'a> {
        debug_assert!(rows.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(rows.iter().all(|&r| r < base.row_count));
        RowSubset {
            base,
            rows: Cow::Borrowed(rows),
        }
    }

    pub fn base(&self) -> &'a Table {
        self.base
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Cells of `column` restricted to this subset, in row order.
    pub fn values<'s>(&'s self, column: &'a Column) -> impl Iterator<Item = &'a Value> + 's {
        self.rows.iter().map(move |&r| column.get(r))
    }

    pub fn column_values(
        &self,
        name: &str,
    ) -> Result<impl Iterator<Item = &'a Value> + '_, TableError> {
        let column = self.base.require_column(name)?;
        Ok(self.values(column))
    }

    /// Materialises the view as a standalone table.
    pub fn to_table(&self) -> Table {
        let columns = self
            .base
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                kind: c.kind,
                cells: self.rows.iter().map(|&r| c.cells[r].clone()).collect(),
            })
            .collect();
        Table {
            columns,
            row_count: self.rows.len(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReadOptions {
    pub na_tokens: Vec<String>,
    pub delimiter: u8,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            na_tokens: vec![String::new(), "NA".to_owned()],
            delimiter: b',',
        }
    }
}

#[derive(Debug, Clone)]
pub struct WriteOptions {
    pub na_token: String,
    pub significant_digits: usize,
    pub delimiter: u8,
}

pub const DEFAULT_SIGNIFICANT_DIGITS: usize = 7;

impl Default for WriteOptions {
    fn default() -> Self {
        WriteOptions {
            na_token: "NA".to_owned(),
            significant_digits: DEFAULT_SIGNIFICANT_DIGITS,
            delimiter: b',',
        }
    }
}

/// Plain decimal literal: optional sign, digits with optional fraction,
/// optional exponent. A leading zero followed by another digit marks a code
/// (`0111`), not a number.
fn parse_decimal(token: &str) -> Option<f64> {
    let bytes = token.as_bytes();
    let mut i = 0;
    if matches!(bytes.first(), Some(b'+' | b'-')) {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let int_digits = i - int_start;
    if int_digits > 1 && bytes[int_start] == b'0' {
        return None;
    }
    let mut frac_digits = 0;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        frac_digits = i - start;
    }
    if int_digits + frac_digits == 0 {
        return None;
    }
    if i < bytes.len() && matches!(bytes[i], b'e' | b'E') {
        i += 1;
        if matches!(bytes.get(i), Some(b'+' | b'-')) {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return None;
        }
    }
    if i != bytes.len() {
        return None;
    }
    token.parse::<f64>().ok().filter(|x| x.is_finite())
}

pub fn read_csv<R: Read>(source: R, options: &ReadOptions) -> Result<Table, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut seen = HashSet::new();
    for name in &headers {
        if !seen.insert(name.as_str()) {
            return Err(TableError::DuplicateColumn(name.clone()));
        }
        if !is_identifier(name) {
            return Err(TableError::InvalidName(name.clone()));
        }
    }

    let mut raw: Vec<Vec<Option<String>>> = vec![Vec::new(); headers.len()];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = i + 2;
        if record.len() != headers.len() {
            return Err(TableError::RaggedRow {
                line,
                expected: headers.len(),
                found: record.len(),
            });
        }
        for (cells, field) in raw.iter_mut().zip(record.iter()) {
            let na = options.na_tokens.iter().any(|t| t == field);
            cells.push((!na).then(|| field.to_owned()));
        }
    }
    let row_count = raw.first().map_or(0, Vec::len);

    let columns = headers
        .into_iter()
        .zip(raw)
        .map(|(name, cells)| {
            let numbers: Option<Vec<Value>> = cells
                .iter()
                .map(|c| match c {
                    None => Some(Value::Null),
                    Some(s) => parse_decimal(s).map(Value::Number),
                })
                .collect();
            match numbers {
                Some(values) => Column::new(name, ColumnKind::Numeric, values),
                None => Column::new(
                    name,
                    ColumnKind::Textual,
                    cells
                        .into_iter()
                        .map(|c| c.map_or(Value::Null, Value::Text))
                        .collect(),
                ),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Table::with_row_count(columns, row_count)
}

/// Formats `x` with at most `digits` significant digits, trailing zeros
/// dropped. Scientific notation only for very large or very small values.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("exponent marker");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if x.fract() == 0.0 && x.abs() < 1e15 {
        return format!("{x:.0}");
    }
    if (-5..15).contains(&exponent) {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        trim_fraction(&fixed).to_owned()
    } else {
        format!("{}e{}", trim_fraction(mantissa), exponent)
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(
    table: &Table,
    sink: W,
    options: &WriteOptions,
) -> Result<(), TableError> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(options.delimiter)
        .from_writer(sink);
    writer.write_record(table.column_names())?;
    for row in 0..table.row_count() {
        writer.write_record(table.columns().iter().map(|c| match c.get(row) {
            Value::Null => options.na_token.clone(),
            Value::Number(x) => format_significant(*x, options.significant_digits),
            Value::Text(s) => s.clone(),
        }))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_csv_string(table: &Table, options: &WriteOptions) -> Result<String, TableError> {
    let mut buf = Vec::new();
    write_csv(table, &mut buf, options)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
