use std::fmt;

use crate::table::canonical_number;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Lt
            | BinaryOp::Le
            | BinaryOp::Gt
            | BinaryOp::Ge
            | BinaryOp::Eq
            | BinaryOp::Ne => 3,
            BinaryOp::Add | BinaryOp::Sub => 4,
            BinaryOp::Mul | BinaryOp::Div => 5,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }

    pub fn is_arithmetic(self) -> bool {
        self.precedence() >= 4
    }

    pub fn is_connective(self) -> bool {
        self.precedence() <= 2
    }
}

const UNARY_PRECEDENCE: u8 = 6;
const ATOM_PRECEDENCE: u8 = 7;

/// Group-level functions. Which ones are callable depends on the language:
/// rules see the first six, aggregation expressions see all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Nrow,
    Sum,
    Mean,
    Min,
    Max,
    CountComplete,
    Median,
    Sample,
    Ols,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Nrow => "nrow",
            Func::Sum => "sum",
            Func::Mean => "mean",
            Func::Min => "min",
            Func::Max => "max",
            Func::CountComplete => "count_complete",
            Func::Median => "median",
            Func::Sample => "sample",
            Func::Ols => "ols",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "nrow" => Func::Nrow,
            "sum" => Func::Sum,
            "mean" => Func::Mean,
            "min" => Func::Min,
            "max" => Func::Max,
            "count_complete" => Func::CountComplete,
            "median" => Func::Median,
            "sample" => Func::Sample,
            "ols" => Func::Ols,
            _ => return None,
        })
    }

    /// Reducers over a row-level expression that accept the `na_rm` flag.
    pub fn is_reducer(self) -> bool {
        matches!(
            self,
            Func::Sum | Func::Mean | Func::Min | Func::Max | Func::Median
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Column(String),
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        args: Vec<Expr>,
        na_rm: bool,
    },
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            Expr::Unary { .. } => UNARY_PRECEDENCE,
            _ => ATOM_PRECEDENCE,
        }
    }

    /// Column names referenced anywhere in the expression.
    pub fn columns(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_columns(&mut out);
        out
    }

    fn collect_columns<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Number(_) => {}
            Expr::Column(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            Expr::Unary { operand, .. } => operand.collect_columns(out),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.collect_columns(out);
                rhs.collect_columns(out);
            }
            Expr::Call { args, .. } => args.iter().for_each(|a| a.collect_columns(out)),
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(x) => f.write_str(&canonical_number(*x)),
            Expr::Column(name) => f.write_str(name),
            Expr::Unary { op, operand } => {
                f.write_str(match op {
                    UnaryOp::Neg => "-",
                    UnaryOp::Not => "!",
                })?;
                write_operand(f, operand, operand.precedence() < UNARY_PRECEDENCE)
            }
            Expr::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                write_operand(f, lhs, lhs.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, rhs, rhs.precedence() <= p)
            }
            Expr::Call { func, args, na_rm } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                if *na_rm {
                    f.write_str(", na_rm")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// One group-quality rule; always boolean-valued at group level.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleExpr(pub(crate) Expr);

impl RuleExpr {
    pub fn expr(&self) -> &Expr {
        &self.0
    }
}

impl fmt::Display for RuleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedExpr {
    pub name: String,
    pub expr: Expr,
}

impl NamedExpr {
    /// Output columns this expression produces.
    pub fn output_names(&self) -> Vec<String> {
        match self.expr {
            Expr::Call { func: Func::Ols, .. } => vec![
                format!("{}_intercept", self.name),
                format!("{}_slope", self.name),
            ],
            _ => vec![self.name.clone()],
        }
    }
}

/// Ordered `name = expression` assignments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggExprList {
    pub(crate) items: Vec<NamedExpr>,
}

impl AggExprList {
    pub fn items(&self) -> &[NamedExpr] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn output_names(&self) -> Vec<String> {
        self.items.iter().flat_map(NamedExpr::output_names).collect()
    }
}

impl fmt::Display for AggExprList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{} = {}", item.name, item.expr)?;
        }
        Ok(())
    }
}
