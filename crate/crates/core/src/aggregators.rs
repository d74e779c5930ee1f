//! Built-in aggregation functions and the two aggregation plans: one reducer
//! applied to every non-grouping column, or a list of named expressions.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::dsl::ast::{AggExprList, Expr, Func};
use crate::dsl::eval::{self, EvalContext};
use crate::error::AggError;
use crate::table::{ColumnKind, RowSubset, Table, Value};
use crate::LEVEL_COLUMN;

/// Reducers available to the apply-to-all-columns plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllColumnsFunc {
    Mean,
    Sum,
    Min,
    Max,
    Median,
    Count,
}

impl AllColumnsFunc {
    pub const ALL: [AllColumnsFunc; 6] = [
        AllColumnsFunc::Mean,
        AllColumnsFunc::Sum,
        AllColumnsFunc::Min,
        AllColumnsFunc::Max,
        AllColumnsFunc::Median,
        AllColumnsFunc::Count,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AllColumnsFunc::Mean => "mean",
            AllColumnsFunc::Sum => "sum",
            AllColumnsFunc::Min => "min",
            AllColumnsFunc::Max => "max",
            AllColumnsFunc::Median => "median",
            AllColumnsFunc::Count => "count",
        }
    }

    fn reducer(self) -> Option<Reducer> {
        Some(match self {
            AllColumnsFunc::Mean => Reducer::Mean,
            AllColumnsFunc::Sum => Reducer::Sum,
            AllColumnsFunc::Min => Reducer::Min,
            AllColumnsFunc::Max => Reducer::Max,
            AllColumnsFunc::Median => Reducer::Median,
            AllColumnsFunc::Count => return None,
        })
    }
}

impl fmt::Display for AllColumnsFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AllColumnsFunc {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AllColumnsFunc::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown aggregator `{s}` (expected mean, sum, min, max, median or count)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AggregationPlan {
    /// One reducer over every column that is not a grouping variable.
    AllColumns { func: AllColumnsFunc, na_rm: bool },
    /// `name = expression` pairs.
    Named(AggExprList),
}

/// Aggregate domain materialised by the built-in plans. `Multi` carries
/// suffixed components, e.g. `intercept` and `slope` of a fitted line.
#[derive(Debug, Clone, PartialEq)]
pub enum AggValue {
    Scalar(Value),
    Multi(Vec<(String, Value)>),
}

impl AggregationPlan {
    /// Output column names, in order, for a given input table.
    pub fn output_names(
        &self,
        table: &Table,
        grouping_vars: &[String],
    ) -> Vec<String> {
        match self {
            AggregationPlan::AllColumns { .. } => table
                .column_names()
                .filter(|n| !grouping_vars.iter().any(|g| g == n))
                .map(str::to_owned)
                .collect(),
            AggregationPlan::Named(list) => list.output_names(),
        }
    }

    /// Checks that referenced columns exist and output names do not collide
    /// with the grouping variables or the level column.
    pub fn validate(&self, table: &Table, grouping_vars: &[String]) -> Result<(), AggError> {
        if let AggregationPlan::Named(list) = self {
            for item in list.items() {
                for col in item.expr.columns() {
                    table.require_column(col)?;
                }
            }
        }
        for name in self.output_names(table, grouping_vars) {
            if name == LEVEL_COLUMN || grouping_vars.contains(&name) {
                return Err(AggError::NameClash(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Reducer {
    Sum,
    Mean,
    Min,
    Max,
    Median,
}

impl Reducer {
    pub(crate) fn from_func(func: Func) -> Option<Reducer> {
        Some(match func {
            Func::Sum => Reducer::Sum,
            Func::Mean => Reducer::Mean,
            Func::Min => Reducer::Min,
            Func::Max => Reducer::Max,
            Func::Median => Reducer::Median,
            _ => return None,
        })
    }
}

/// Reduces a sequence of optional numbers. Without `na_rm` any missing value
/// makes the result missing. An empty sum is 0; every other reducer over
/// zero values is missing.
pub(crate) fn reduce<I>(reducer: Reducer, values: I, na_rm: bool) -> Value
where
    I: IntoIterator<Item = Option<f64>>,
{
    let mut xs = Vec::new();
    for v in values {
        match v {
            Some(x) => xs.push(x),
            None if na_rm => {}
            None => return Value::Null,
        }
    }
    match reducer {
        Reducer::Sum => Value::number(xs.iter().sum()),
        _ if xs.is_empty() => Value::Null,
        Reducer::Mean => Value::number(xs.iter().sum::<f64>() / xs.len() as f64),
        Reducer::Min => Value::number(xs.iter().copied().fold(f64::INFINITY, f64::min)),
        Reducer::Max => Value::number(xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        Reducer::Median => {
            xs.sort_by(f64::total_cmp);
            let mid = xs.len() / 2;
            if xs.len() % 2 == 1 {
                Value::number(xs[mid])
            } else {
                Value::number((xs[mid - 1] + xs[mid]) / 2.0)
            }
        }
    }
}

/// Stable per-group seed: SHA-256 over the global seed and the canonical
/// label string, truncated to 64 bits.
pub fn group_seed(global_seed: u64, label_key: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(global_seed.to_le_bytes());
    hasher.update(label_key.as_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head)
}

/// Uniform draw over the non-missing values, from ChaCha8 stream 0 keyed by
/// `group_seed`.
pub fn sample_value<'v, I>(values: I, group_seed: u64) -> Value
where
    I: IntoIterator<Item = &'v Value>,
{
    sample_from_stream(values, group_seed, 0)
}

pub(crate) fn sample_from_stream<'v, I>(values: I, seed: u64, stream: u64) -> Value
where
    I: IntoIterator<Item = &'v Value>,
{
    let pool: Vec<&Value> = values.into_iter().filter(|v| !v.is_null()).collect();
    if pool.is_empty() {
        return Value::Null;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    pool[rng.random_range(0..pool.len())].clone()
}

/// Least-squares line `y = intercept + slope * x` over the pairs where both
/// values are present. Fewer than two pairs or a constant `x` gives `Null`
/// coefficients.
pub fn ols_fit(y: &[Value], x: &[Value]) -> (Value, Value) {
    let pairs: Vec<(f64, f64)> = y
        .iter()
        .zip(x)
        .filter_map(|(y, x)| Some((x.as_f64()?, y.as_f64()?)))
        .collect();
    if pairs.len() < 2 {
        return (Value::Null, Value::Null);
    }
    let first_x = pairs[0].0;
    if pairs.iter().all(|&(x, _)| x == first_x) {
        return (Value::Null, Value::Null);
    }
    let n = pairs.len() as f64;
    let x_mean = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, sxy) = pairs.iter().fold((0.0, 0.0), |(sxx, sxy), &(x, y)| {
        let dx = x - x_mean;
        (sxx + dx * dx, sxy + dx * (y - y_mean))
    });
    if sxx == 0.0 {
        return (Value::Null, Value::Null);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    match (Value::number(intercept), Value::number(slope)) {
        (Value::Null, _) | (_, Value::Null) => (Value::Null, Value::Null),
        (b0, b1) => (b0, b1),
    }
}

fn all_columns(
    func: AllColumnsFunc,
    na_rm: bool,
    subset: &RowSubset<'_>,
    grouping_vars: &[String],
) -> Vec<(String, Value)> {
    subset
        .base()
        .columns()
        .iter()
        .filter(|c| !grouping_vars.iter().any(|g| g == c.name()))
        .map(|column| {
            let value = match (func.reducer(), column.kind()) {
                (None, _) => {
                    let n = if na_rm {
                        subset.values(column).filter(|v| !v.is_null()).count()
                    } else {
                        subset.row_count()
                    };
                    Value::Number(n as f64)
                }
                (Some(_), ColumnKind::Textual) => Value::Null,
                (Some(reducer), ColumnKind::Numeric) => {
                    reduce(reducer, subset.values(column).map(Value::as_f64), na_rm)
                }
            };
            (column.name().to_owned(), value)
        })
        .collect()
}

/// Evaluates one named expression over a subset.
pub(crate) fn eval_named(
    expr: &Expr,
    subset: &RowSubset<'_>,
    ctx: &mut EvalContext,
) -> Result<AggValue, AggError> {
    if let Expr::Call {
        func: Func::Ols,
        args,
        ..
    } = expr
    {
        let column = |e: &Expr| match e {
            Expr::Column(name) => subset.base().require_column(name),
            _ => unreachable!("ols arguments are columns"),
        };
        let y = column(&args[0])?;
        let x = column(&args[1])?;
        let ys: Vec<Value> = subset.values(y).cloned().collect();
        let xs: Vec<Value> = subset.values(x).cloned().collect();
        let (intercept, slope) = ols_fit(&ys, &xs);
        return Ok(AggValue::Multi(vec![
            ("intercept".to_owned(), intercept),
            ("slope".to_owned(), slope),
        ]));
    }
    Ok(AggValue::Scalar(eval::eval_value(expr, subset, ctx)?))
}

/// Applies `plan` to `subset`, producing `(output name, value)` pairs in
/// plan order. `group_seed` keys any random draws.
pub fn eval_agg(
    plan: &AggregationPlan,
    subset: &RowSubset<'_>,
    grouping_vars: &[String],
    group_seed: u64,
) -> Result<Vec<(String, Value)>, AggError> {
    match plan {
        AggregationPlan::AllColumns { func, na_rm } => {
            Ok(all_columns(*func, *na_rm, subset, grouping_vars))
        }
        AggregationPlan::Named(list) => {
            let mut ctx = EvalContext::new(group_seed);
            let mut out = Vec::with_capacity(list.len());
            for item in list.items() {
                match eval_named(&item.expr, subset, &mut ctx)? {
                    AggValue::Scalar(v) => out.push((item.name.clone(), v)),
                    AggValue::Multi(parts) => out.extend(
                        parts
                            .into_iter()
                            .map(|(suffix, v)| (format!("{}_{suffix}", item.name), v)),
                    ),
                }
            }
            Ok(out)
        }
    }
}
