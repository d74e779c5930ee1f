use std::fmt;

use super::lexer::{tokenize, Tok};
use crate::error::{ParseError, ParseErrorKind};

/// `target ~ alternative1 + alternative2 + ...`, each side a `*`-product of
/// variable names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollapseFormula {
    pub target: Vec<String>,
    pub alternatives: Vec<Vec<String>>,
}

impl CollapseFormula {
    /// Every variable the formula mentions, target first, without repeats.
    pub fn variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for v in self.target.iter().chain(self.alternatives.iter().flatten()) {
            if !out.contains(&v.as_str()) {
                out.push(v);
            }
        }
        out
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, vars: &[String]) -> fmt::Result {
    f.write_str(&vars.join(" * "))
}

impl fmt::Display for CollapseFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, &self.target)?;
        f.write_str(" ~ ")?;
        for (i, alt) in self.alternatives.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write_term(f, alt)?;
        }
        Ok(())
    }
}

pub fn parse_formula(text: &str) -> Result<CollapseFormula, ParseError> {
    let tokens: Vec<_> = tokenize(text)?
        .into_iter()
        .filter(|t| t.tok != Tok::Newline)
        .collect();
    let mut pos = 0;

    let term = |pos: &mut usize, side: &str| -> Result<Vec<String>, ParseError> {
        let mut vars: Vec<String> = Vec::new();
        loop {
            let t = &tokens[*pos];
            match &t.tok {
                Tok::Ident(name) => {
                    if vars.contains(name) {
                        return Err(ParseError::new(
                            ParseErrorKind::Duplicate,
                            t.offset,
                            format!("variable `{name}` appears twice in one term"),
                        ));
                    }
                    vars.push(name.clone());
                    *pos += 1;
                }
                Tok::Eof if vars.is_empty() => {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        t.offset,
                        format!("empty {side}"),
                    ))
                }
                other => {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        t.offset,
                        format!("expected a variable name in {side}, found {}", other.describe()),
                    ))
                }
            }
            if tokens[*pos].tok == Tok::Star {
                *pos += 1;
            } else {
                return Ok(vars);
            }
        }
    };

    let target = term(&mut pos, "target grouping")?;
    let t = &tokens[pos];
    if t.tok != Tok::Tilde {
        return Err(ParseError::new(
            ParseErrorKind::Syntax,
            t.offset,
            format!("expected `~` after target grouping, found {}", t.tok.describe()),
        ));
    }
    pos += 1;
    if tokens[pos].tok == Tok::Eof {
        return Err(ParseError::new(
            ParseErrorKind::Syntax,
            tokens[pos].offset,
            "empty alternative list: at least one collapsing alternative is required",
        ));
    }
    let mut alternatives = vec![term(&mut pos, "alternative")?];
    loop {
        let t = &tokens[pos];
        match t.tok {
            Tok::Plus => {
                pos += 1;
                alternatives.push(term(&mut pos, "alternative")?);
            }
            Tok::Eof => break,
            ref other => {
                return Err(ParseError::new(
                    ParseErrorKind::Syntax,
                    t.offset,
                    format!("expected `+` or end of formula, found {}", other.describe()),
                ))
            }
        }
    }
    Ok(CollapseFormula {
        target,
        alternatives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_two_alternatives() {
        let f = parse_formula("A * B ~ A * B1 + A").unwrap();
        assert_eq!(f.target, vars(&["A", "B"]));
        assert_eq!(f.alternatives, vec![vars(&["A", "B1"]), vars(&["A"])]);
    }

    #[test]
    fn whitespace_is_insignificant() {
        let f = parse_formula("A*B~A").unwrap();
        assert_eq!(f, parse_formula("  A *\n B ~\tA ").unwrap());
        assert_eq!(f.alternatives, vec![vars(&["A"])]);
    }

    #[test]
    fn empty_alternatives_is_error() {
        let err = parse_formula("A ~ ").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Syntax);
        assert!(err.message.contains("empty alternative list"));
        assert_eq!(err.offset, 4);
    }

    #[test]
    fn empty_target_is_error() {
        let err = parse_formula("~ A").unwrap_err();
        assert_eq!(err.offset, 0);
    }

    #[test]
    fn duplicate_in_term_is_error() {
        let err = parse_formula("A * A ~ A").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Duplicate);
        assert_eq!(err.offset, 4);
    }

    #[test]
    fn trailing_plus_is_error() {
        assert!(parse_formula("A * B ~ A +").is_err());
        assert!(parse_formula("A * B ~ A B").is_err());
    }

    #[test]
    fn display_round_trips() {
        let f = parse_formula("id ~ sbi*size + sbi + sbi2 + sbi1").unwrap();
        assert_eq!(f.to_string(), "id ~ sbi * size + sbi + sbi2 + sbi1");
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }
}
