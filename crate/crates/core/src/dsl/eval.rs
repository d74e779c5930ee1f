//! Evaluation of parsed expressions over a row subset, with missing values
//! propagated through arithmetic, comparisons and three-valued connectives.

use super::ast::{BinaryOp, Expr, Func, UnaryOp};
use crate::aggregators::{reduce, sample_from_stream, Reducer};
use crate::error::TableError;
use crate::table::{Column, ColumnKind, RowSubset, Table, Value};

/// Per-group evaluation state. Each `sample()` call draws from its own
/// stream so draws do not depend on one another.
pub(crate) struct EvalContext {
    seed: u64,
    draws: u64,
}

impl EvalContext {
    pub(crate) fn new(seed: u64) -> EvalContext {
        EvalContext { seed, draws: 0 }
    }
}

enum RowNode<'a> {
    Const(f64),
    Col(&'a Column),
    Neg(Box<RowNode<'a>>),
    Bin(BinaryOp, Box<RowNode<'a>>, Box<RowNode<'a>>),
}

struct Compiled<'a> {
    node: RowNode<'a>,
    textual: bool,
}

fn compile_row<'a>(expr: &Expr, table: &'a Table) -> Result<Compiled<'a>, TableError> {
    let mut textual = false;
    let node = compile_node(expr, table, &mut textual)?;
    Ok(Compiled { node, textual })
}

fn compile_node<'a>(
    expr: &Expr,
    table: &'a Table,
    textual: &mut bool,
) -> Result<RowNode<'a>, TableError> {
    Ok(match expr {
        Expr::Number(x) => RowNode::Const(*x),
        Expr::Column(name) => {
            let column = table.require_column(name)?;
            if column.kind() == ColumnKind::Textual {
                *textual = true;
            }
            RowNode::Col(column)
        }
        Expr::Unary {
            op: UnaryOp::Neg,
            operand,
        } => RowNode::Neg(Box::new(compile_node(operand, table, textual)?)),
        Expr::Binary { op, lhs, rhs } if !op.is_connective() => RowNode::Bin(
            *op,
            Box::new(compile_node(lhs, table, textual)?),
            Box::new(compile_node(rhs, table, textual)?),
        ),
        other => unreachable!("`{other}` is not a row-level expression"),
    })
}

fn arith(op: BinaryOp, a: f64, b: f64) -> Option<f64> {
    let r = match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div if b == 0.0 => return None,
        BinaryOp::Div => a / b,
        BinaryOp::Lt => f64::from(u8::from(a < b)),
        BinaryOp::Le => f64::from(u8::from(a <= b)),
        BinaryOp::Gt => f64::from(u8::from(a > b)),
        BinaryOp::Ge => f64::from(u8::from(a >= b)),
        BinaryOp::Eq => f64::from(u8::from(a == b)),
        BinaryOp::Ne => f64::from(u8::from(a != b)),
        BinaryOp::And | BinaryOp::Or => unreachable!("connectives are group-level"),
    };
    r.is_finite().then_some(r)
}

/// Row value; comparisons yield 1/0.
fn eval_row(node: &RowNode<'_>, row: usize) -> Option<f64> {
    match node {
        RowNode::Const(x) => Some(*x),
        RowNode::Col(c) => c.get(row).as_f64(),
        RowNode::Neg(inner) => eval_row(inner, row).map(|x| -x),
        RowNode::Bin(op, l, r) => arith(*op, eval_row(l, row)?, eval_row(r, row)?),
    }
}

fn kleene_and(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

fn kleene_or(a: Option<bool>, b: Option<bool>) -> Option<bool> {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

/// Evaluates a group-level condition; `None` is the missing truth value.
pub(crate) fn eval_condition(
    expr: &Expr,
    subset: &RowSubset<'_>,
    ctx: &mut EvalContext,
) -> Result<Option<bool>, TableError> {
    Ok(match expr {
        Expr::Unary {
            op: UnaryOp::Not,
            operand,
        } => eval_condition(operand, subset, ctx)?.map(|b| !b),
        Expr::Binary {
            op: BinaryOp::And,
            lhs,
            rhs,
        } => {
            let l = eval_condition(lhs, subset, ctx)?;
            if l == Some(false) {
                return Ok(l);
            }
            kleene_and(l, eval_condition(rhs, subset, ctx)?)
        }
        Expr::Binary {
            op: BinaryOp::Or,
            lhs,
            rhs,
        } => {
            let l = eval_condition(lhs, subset, ctx)?;
            if l == Some(true) {
                return Ok(l);
            }
            kleene_or(l, eval_condition(rhs, subset, ctx)?)
        }
        Expr::Binary { op, lhs, rhs } if op.is_comparison() => {
            let l = eval_value(lhs, subset, ctx)?;
            let r = eval_value(rhs, subset, ctx)?;
            match (l.as_f64(), r.as_f64()) {
                (Some(a), Some(b)) => arith(*op, a, b).map(|x| x != 0.0),
                _ => None,
            }
        }
        other => unreachable!("`{other}` is not a condition"),
    })
}

/// Evaluates a group-level numeric expression. `sample()` may return text.
pub(crate) fn eval_value(
    expr: &Expr,
    subset: &RowSubset<'_>,
    ctx: &mut EvalContext,
) -> Result<Value, TableError> {
    Ok(match expr {
        Expr::Number(x) => Value::number(*x),
        Expr::Column(_) => unreachable!("row-level column outside a group function"),
        Expr::Unary {
            op: UnaryOp::Neg,
            operand,
        } => match eval_value(operand, subset, ctx)?.as_f64() {
            Some(x) => Value::number(-x),
            None => Value::Null,
        },
        Expr::Unary { .. } => unreachable!("negated condition in numeric context"),
        Expr::Binary { op, lhs, rhs } => {
            let l = eval_value(lhs, subset, ctx)?;
            let r = eval_value(rhs, subset, ctx)?;
            match (l.as_f64(), r.as_f64()) {
                (Some(a), Some(b)) => Value::from(arith(*op, a, b)),
                _ => Value::Null,
            }
        }
        Expr::Call { func, args, na_rm } => eval_call(*func, args, *na_rm, subset, ctx)?,
    })
}

fn eval_call(
    func: Func,
    args: &[Expr],
    na_rm: bool,
    subset: &RowSubset<'_>,
    ctx: &mut EvalContext,
) -> Result<Value, TableError> {
    let table = subset.base();
    let column_arg = |e: &Expr| match e {
        Expr::Column(name) => table.require_column(name),
        other => unreachable!("`{other}` is not a column"),
    };
    Ok(match func {
        Func::Nrow => Value::Number(subset.row_count() as f64),
        Func::CountComplete => {
            let columns = args
                .iter()
                .map(column_arg)
                .collect::<Result<Vec<_>, _>>()?;
            let n = subset
                .rows()
                .iter()
                .filter(|&&r| columns.iter().all(|c| !c.get(r).is_null()))
                .count();
            Value::Number(n as f64)
        }
        Func::Sample => {
            let column = column_arg(&args[0])?;
            let stream = ctx.draws;
            ctx.draws += 1;
            sample_from_stream(subset.values(column), ctx.seed, stream)
        }
        Func::Ols => unreachable!("ols() is evaluated by the aggregation plan"),
        reducer => {
            let reducer = Reducer::from_func(reducer).expect("reducer function");
            let compiled = compile_row(&args[0], table)?;
            if compiled.textual {
                return Ok(Value::Null);
            }
            reduce(
                reducer,
                subset.rows().iter().map(|&r| eval_row(&compiled.node, r)),
                na_rm,
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_agg_exprs, parse_rules};
    use crate::table::{read_csv, ReadOptions};

    fn table() -> Table {
        read_csv(
            "Y,X,k\n1,2,a\n2,NA,b\n3,0,NA\n".as_bytes(),
            &ReadOptions::default(),
        )
        .unwrap()
    }

    fn cond(text: &str, t: &Table) -> Option<bool> {
        let rule = parse_rules(text).unwrap().remove(0);
        eval_condition(rule.expr(), &t.all_rows(), &mut EvalContext::new(0)).unwrap()
    }

    fn value(text: &str, t: &Table) -> Value {
        let list = parse_agg_exprs(&format!("v = {text}")).unwrap();
        eval_value(&list.items()[0].expr, &t.all_rows(), &mut EvalContext::new(0)).unwrap()
    }

    #[test]
    fn comparison_sums_coerce_to_counts() {
        let t = table();
        assert_eq!(value("sum(Y >= 2)", &t), Value::Number(2.0));
        assert_eq!(value("mean(Y >= 2)", &t), Value::Number(2.0 / 3.0));
    }

    #[test]
    fn missing_values_propagate_without_na_rm() {
        let t = table();
        assert_eq!(value("sum(X)", &t), Value::Null);
        assert_eq!(value("sum(X, na_rm)", &t), Value::Number(2.0));
        assert_eq!(cond("sum(X) > 0", &t), None);
    }

    #[test]
    fn division_by_zero_is_null() {
        let t = table();
        assert_eq!(value("sum(Y / X, na_rm)", &t), Value::Number(0.5));
        assert_eq!(value("nrow() / 0", &t), Value::Null);
    }

    #[test]
    fn kleene_connectives() {
        let t = table();
        assert_eq!(cond("nrow() > 5 && sum(X) > 0", &t), Some(false));
        assert_eq!(cond("nrow() > 1 && sum(X) > 0", &t), None);
        assert_eq!(cond("nrow() > 1 || sum(X) > 0", &t), Some(true));
        assert_eq!(cond("nrow() > 5 || sum(X) > 0", &t), None);
        assert_eq!(cond("!(sum(X) > 0)", &t), None);
        assert_eq!(cond("!(nrow() > 5)", &t), Some(true));
    }

    #[test]
    fn count_complete_counts_rows() {
        let t = table();
        assert_eq!(value("count_complete(Y)", &t), Value::Number(3.0));
        assert_eq!(value("count_complete(X, k)", &t), Value::Number(1.0));
    }

    #[test]
    fn textual_column_in_numeric_reducer_is_null() {
        let t = table();
        assert_eq!(value("mean(k, na_rm)", &t), Value::Null);
    }

    #[test]
    fn unknown_column_is_an_error() {
        let t = table();
        let rule = parse_rules("sum(Z) > 1").unwrap().remove(0);
        let err = eval_condition(rule.expr(), &t.all_rows(), &mut EvalContext::new(0));
        assert!(matches!(err, Err(TableError::UnknownColumn(ref n)) if n == "Z"));
    }

    #[test]
    fn empty_subset() {
        let t = table();
        let empty = t.no_rows();
        let mut ctx = EvalContext::new(0);
        let rules = parse_rules("nrow() >= 3; sum(Y >= 2) >= 3; mean(Y) > 0").unwrap();
        let got: Vec<_> = rules
            .iter()
            .map(|r| eval_condition(r.expr(), &empty, &mut ctx).unwrap())
            .collect();
        assert_eq!(got, vec![Some(false), Some(false), None]);
    }

    #[test]
    fn sample_draws_are_independent_streams() {
        let t = read_csv("x\n1\n2\n3\n4\n5\n6\n7\n8\n".as_bytes(), &ReadOptions::default()).unwrap();
        let list = parse_agg_exprs("a = sample(x); b = sample(x)").unwrap();
        let differ = (0..64).any(|seed| {
            let mut ctx = EvalContext::new(seed);
            let a = eval_value(&list.items()[0].expr, &t.all_rows(), &mut ctx).unwrap();
            let b = eval_value(&list.items()[1].expr, &t.all_rows(), &mut ctx).unwrap();
            a != b
        });
        assert!(differ);
    }
}
