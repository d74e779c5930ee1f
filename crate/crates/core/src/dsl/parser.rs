use std::collections::HashSet;

use super::ast::{AggExprList, BinaryOp, Expr, Func, NamedExpr, RuleExpr, UnaryOp};
use super::lexer::{tokenize, Tok, Token};
use crate::error::{ParseError, ParseErrorKind};
use crate::LEVEL_COLUMN;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Dialect {
    Rules,
    Aggregates,
}

/// Where a value lives: constant, per row, or per group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scope {
    Const,
    Row,
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Num,
    Bool,
    Model,
}

#[derive(Debug, Clone, Copy)]
struct Ty {
    scope: Scope,
    kind: Kind,
}

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    dialect: Dialect,
}

type PResult<T> = Result<T, ParseError>;

fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError::new(ParseErrorKind::Syntax, offset, message)
}

fn type_error(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError::new(ParseErrorKind::Type, offset, message)
}

impl Parser {
    pub(crate) fn new(text: &str, dialect: Dialect) -> PResult<Parser> {
        Ok(Parser {
            tokens: tokenize(text)?,
            pos: 0,
            dialect,
        })
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].offset
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> PResult<Token> {
        if self.peek() == tok {
            Ok(self.bump())
        } else {
            Err(syntax(
                self.offset(),
                format!("expected {what}, found {}", self.peek().describe()),
            ))
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Tok::Semi | Tok::Newline) {
            self.bump();
        }
    }

    fn end_statement(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Semi | Tok::Newline | Tok::Eof => Ok(()),
            other => Err(syntax(
                self.offset(),
                format!("expected `;` or end of line, found {}", other.describe()),
            )),
        }
    }

    pub(crate) fn parse_rules(mut self) -> PResult<Vec<RuleExpr>> {
        let mut rules = Vec::new();
        loop {
            self.skip_separators();
            if *self.peek() == Tok::Eof {
                break;
            }
            let start = self.offset();
            let (expr, ty) = self.expr()?;
            match (ty.scope, ty.kind) {
                (Scope::Row, _) => {
                    return Err(type_error(
                        start,
                        format!(
                            "`{expr}` is evaluated per row; wrap it in a group function such as sum(...)"
                        ),
                    ))
                }
                (_, Kind::Bool) => {}
                _ => {
                    return Err(type_error(
                        start,
                        format!("rule `{expr}` is not a condition"),
                    ))
                }
            }
            self.end_statement()?;
            rules.push(RuleExpr(expr));
        }
        if rules.is_empty() {
            return Err(syntax(0, "no rules given"));
        }
        Ok(rules)
    }

    pub(crate) fn parse_assignments(mut self) -> PResult<AggExprList> {
        let mut items: Vec<NamedExpr> = Vec::new();
        let mut outputs = HashSet::new();
        loop {
            self.skip_separators();
            if *self.peek() == Tok::Eof {
                break;
            }
            let name_at = self.offset();
            let name = match self.bump().tok {
                Tok::Ident(name) => name,
                other => {
                    return Err(syntax(
                        name_at,
                        format!("expected output name, found {}", other.describe()),
                    ))
                }
            };
            self.expect(&Tok::Assign, "`=` after output name")?;
            let start = self.offset();
            let (expr, ty) = self.expr()?;
            match (ty.scope, ty.kind) {
                (Scope::Row, _) => {
                    return Err(type_error(
                        start,
                        format!(
                            "`{expr}` is evaluated per row; wrap it in a group function such as mean(...)"
                        ),
                    ))
                }
                (_, Kind::Bool) => {
                    return Err(type_error(
                        start,
                        format!("`{expr}` is a condition, expected a numeric aggregate"),
                    ))
                }
                _ => {}
            }
            self.end_statement()?;
            let item = NamedExpr { name, expr };
            for out in item.output_names() {
                if out == LEVEL_COLUMN || !outputs.insert(out.clone()) {
                    return Err(ParseError::new(
                        ParseErrorKind::Duplicate,
                        name_at,
                        format!("output name `{out}` is used twice or is reserved"),
                    ));
                }
            }
            items.push(item);
        }
        if items.is_empty() {
            return Err(syntax(0, "no expressions given"));
        }
        Ok(AggExprList { items })
    }

    fn expr(&mut self) -> PResult<(Expr, Ty)> {
        self.binary(1)
    }

    fn peek_binary(&self) -> Option<BinaryOp> {
        Some(match self.peek() {
            Tok::OrOr => BinaryOp::Or,
            Tok::AndAnd => BinaryOp::And,
            Tok::Lt => BinaryOp::Lt,
            Tok::Le => BinaryOp::Le,
            Tok::Gt => BinaryOp::Gt,
            Tok::Ge => BinaryOp::Ge,
            Tok::EqEq => BinaryOp::Eq,
            Tok::NotEq => BinaryOp::Ne,
            Tok::Plus => BinaryOp::Add,
            Tok::Minus => BinaryOp::Sub,
            Tok::Star => BinaryOp::Mul,
            Tok::Slash => BinaryOp::Div,
            _ => return None,
        })
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min_prec: u8) -> PResult<(Expr, Ty)> {
        let start = self.offset();
        let (mut lhs, mut lty) = self.unary()?;
        while let Some(op) = self.peek_binary() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let (rhs, rty) = self.binary(prec + 1)?;
            let ty = check_binary(op, &lhs, lty, &rhs, rty, start)?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
            lty = ty;
        }
        Ok((lhs, lty))
    }

    fn unary(&mut self) -> PResult<(Expr, Ty)> {
        let start = self.offset();
        let op = match self.peek() {
            Tok::Minus => UnaryOp::Neg,
            Tok::Bang => UnaryOp::Not,
            _ => return self.primary(),
        };
        self.bump();
        let (operand, ty) = self.unary()?;
        let ty = match op {
            UnaryOp::Neg if ty.kind == Kind::Num => ty,
            UnaryOp::Not if ty.kind == Kind::Bool && ty.scope != Scope::Row => ty,
            UnaryOp::Neg => {
                return Err(type_error(
                    start,
                    format!("cannot negate non-numeric `{operand}`"),
                ))
            }
            UnaryOp::Not => {
                return Err(type_error(
                    start,
                    format!("`!` needs a group-level condition, found `{operand}`"),
                ))
            }
        };
        Ok((
            Expr::Unary {
                op,
                operand: Box::new(operand),
            },
            ty,
        ))
    }

    fn primary(&mut self) -> PResult<(Expr, Ty)> {
        let token = self.bump();
        match token.tok {
            Tok::Number(x) => Ok((
                Expr::Number(x),
                Ty {
                    scope: Scope::Const,
                    kind: Kind::Num,
                },
            )),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.call(name, token.offset)
                } else {
                    Ok((
                        Expr::Column(name),
                        Ty {
                            scope: Scope::Row,
                            kind: Kind::Num,
                        },
                    ))
                }
            }
            other => Err(syntax(
                token.offset,
                format!("expected an expression, found {}", other.describe()),
            )),
        }
    }

    fn call(&mut self, name: String, at: usize) -> PResult<(Expr, Ty)> {
        let func = Func::from_name(&name).ok_or_else(|| {
            ParseError::new(
                ParseErrorKind::UnknownFunction,
                at,
                format!("unknown function `{name}`"),
            )
        })?;
        if self.dialect == Dialect::Rules
            && matches!(func, Func::Median | Func::Sample | Func::Ols)
        {
            return Err(ParseError::new(
                ParseErrorKind::UnknownFunction,
                at,
                format!("function `{name}` is not available in rules"),
            ));
        }
        self.expect(&Tok::LParen, "`(`")?;

        // nrow() and nrow(.)
        if func == Func::Nrow {
            self.eat(&Tok::Dot);
            if *self.peek() != Tok::RParen {
                return Err(ParseError::new(
                    ParseErrorKind::Arity,
                    self.offset(),
                    "nrow() takes no arguments",
                ));
            }
            self.bump();
            return Ok((
                Expr::Call {
                    func,
                    args: Vec::new(),
                    na_rm: false,
                },
                group_num(),
            ));
        }

        let mut args: Vec<(Expr, Ty, usize)> = Vec::new();
        let mut na_rm = false;
        if *self.peek() != Tok::RParen {
            loop {
                let arg_at = self.offset();
                if func.is_reducer()
                    && args.len() == 1
                    && *self.peek() == Tok::Ident("na_rm".into())
                {
                    self.bump();
                    na_rm = true;
                } else {
                    let (e, ty) = self.expr()?;
                    args.push((e, ty, arg_at));
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
                if na_rm {
                    return Err(ParseError::new(
                        ParseErrorKind::Arity,
                        self.offset(),
                        "na_rm must be the last argument",
                    ));
                }
            }
        }
        self.expect(&Tok::RParen, "`)` closing the argument list")?;

        let arity = |ok: bool, expected: &str| {
            if ok {
                Ok(())
            } else {
                Err(ParseError::new(
                    ParseErrorKind::Arity,
                    at,
                    format!("{name}() takes {expected}"),
                ))
            }
        };
        let column_args = |args: &[(Expr, Ty, usize)]| {
            for (e, _, arg_at) in args {
                if !matches!(e, Expr::Column(_)) {
                    return Err(type_error(
                        *arg_at,
                        format!("{name}() expects column names, found `{e}`"),
                    ));
                }
            }
            Ok(())
        };

        let ty = match func {
            Func::Nrow => unreachable!("handled above"),
            f if f.is_reducer() => {
                arity(args.len() == 1, "one argument plus an optional na_rm flag")?;
                let (e, ty, arg_at) = &args[0];
                if ty.scope == Scope::Group || ty.kind == Kind::Model {
                    return Err(type_error(
                        *arg_at,
                        format!("{name}() needs a row-level expression, found `{e}`"),
                    ));
                }
                group_num()
            }
            Func::CountComplete => {
                arity(!args.is_empty(), "at least one column")?;
                column_args(&args)?;
                group_num()
            }
            Func::Sample => {
                arity(args.len() == 1, "exactly one column")?;
                column_args(&args)?;
                group_num()
            }
            Func::Ols => {
                arity(args.len() == 2, "exactly two columns (response, predictor)")?;
                column_args(&args)?;
                Ty {
                    scope: Scope::Group,
                    kind: Kind::Model,
                }
            }
            _ => unreachable!("all functions covered"),
        };
        Ok((
            Expr::Call {
                func,
                args: args.into_iter().map(|(e, _, _)| e).collect(),
                na_rm,
            },
            ty,
        ))
    }
}

fn group_num() -> Ty {
    Ty {
        scope: Scope::Group,
        kind: Kind::Num,
    }
}

fn check_binary(op: BinaryOp, lhs: &Expr, lty: Ty, rhs: &Expr, rty: Ty, at: usize) -> PResult<Ty> {
    let describe = || format!("`{lhs} {} {rhs}`", op.symbol());
    if lty.kind == Kind::Model || rty.kind == Kind::Model {
        return Err(type_error(
            at,
            format!("ols() must be the whole expression, found {}", describe()),
        ));
    }
    let scope = match (lty.scope, rty.scope) {
        (Scope::Const, s) | (s, Scope::Const) => s,
        (a, b) if a == b => a,
        _ => {
            return Err(type_error(
                at,
                format!(
                    "{} mixes row-level and group-level values; row-level expressions belong inside a group function",
                    describe()
                ),
            ))
        }
    };
    let kind = if op.is_connective() {
        if lty.kind != Kind::Bool || rty.kind != Kind::Bool {
            return Err(type_error(
                at,
                format!("{} needs conditions on both sides", describe()),
            ));
        }
        if scope == Scope::Row {
            return Err(type_error(
                at,
                format!("{} combines row-level conditions; `&&`/`||` apply to group-level conditions only", describe()),
            ));
        }
        Kind::Bool
    } else {
        if lty.kind != Kind::Num || rty.kind != Kind::Num {
            return Err(type_error(
                at,
                format!("{} needs numeric operands", describe()),
            ));
        }
        if op.is_comparison() {
            Kind::Bool
        } else {
            Kind::Num
        }
    };
    Ok(Ty { scope, kind })
}
