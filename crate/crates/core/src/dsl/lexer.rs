use crate::error::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Dot,
    LParen,
    RParen,
    Comma,
    Semi,
    Newline,
    Plus,
    Minus,
    Star,
    Slash,
    Tilde,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(x) => format!("number `{x}`"),
            Tok::Newline => "end of line".to_owned(),
            Tok::Eof => "end of input".to_owned(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Dot => ".",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Tilde => "~",
            Tok::Assign => "=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Ident(_) | Tok::Number(_) | Tok::Newline | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub offset: usize,
}

/// Splits `text` into tokens. Newlines inside parentheses are dropped so
/// that long calls may wrap; `#` starts a comment running to end of line.
pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut depth = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b'\n' => {
                i += 1;
                if depth > 0 {
                    continue;
                }
                Tok::Newline
            }
            b' ' | b'\t' | b'\r' => {
                i += 1;
                continue;
            }
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'0'..=b'9' => lex_number(text, &mut i)?,
            b'.' if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => lex_number(text, &mut i)?,
            b'.' => {
                i += 1;
                Tok::Dot
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.')
                {
                    i += 1;
                }
                Tok::Ident(text[start..i].to_owned())
            }
            _ => {
                let two = bytes.get(i..i + 2);
                let (tok, width) = match (c, two) {
                    (_, Some(b"==")) => (Tok::EqEq, 2),
                    (_, Some(b"!=")) => (Tok::NotEq, 2),
                    (_, Some(b"<=")) => (Tok::Le, 2),
                    (_, Some(b">=")) => (Tok::Ge, 2),
                    (_, Some(b"&&")) => (Tok::AndAnd, 2),
                    (_, Some(b"||")) => (Tok::OrOr, 2),
                    (b'(', _) => (Tok::LParen, 1),
                    (b')', _) => (Tok::RParen, 1),
                    (b',', _) => (Tok::Comma, 1),
                    (b';', _) => (Tok::Semi, 1),
                    (b'+', _) => (Tok::Plus, 1),
                    (b'-', _) => (Tok::Minus, 1),
                    (b'*', _) => (Tok::Star, 1),
                    (b'/', _) => (Tok::Slash, 1),
                    (b'~', _) => (Tok::Tilde, 1),
                    (b'=', _) => (Tok::Assign, 1),
                    (b'<', _) => (Tok::Lt, 1),
                    (b'>', _) => (Tok::Gt, 1),
                    (b'!', _) => (Tok::Bang, 1),
                    _ => {
                        let ch = text[i..].chars().next().unwrap_or('?');
                        return Err(ParseError::new(
                            ParseErrorKind::Syntax,
                            i,
                            format!("unexpected character `{ch}`"),
                        ));
                    }
                };
                i += width;
                match tok {
                    Tok::LParen => depth += 1,
                    Tok::RParen => depth = depth.saturating_sub(1),
                    _ => {}
                }
                tok
            }
        };
        tokens.push(Token { tok, offset: start });
    }
    tokens.push(Token {
        tok: Tok::Eof,
        offset: text.len(),
    });
    Ok(tokens)
}

fn lex_number(text: &str, i: &mut usize) -> Result<Tok, ParseError> {
    let bytes = text.as_bytes();
    let start = *i;
    let digits = |i: &mut usize| {
        while *i < bytes.len() && bytes[*i].is_ascii_digit() {
            *i += 1;
        }
    };
    digits(i);
    if *i < bytes.len() && bytes[*i] == b'.' {
        *i += 1;
        digits(i);
    }
    if *i < bytes.len() && matches!(bytes[*i], b'e' | b'E') {
        let mut j = *i + 1;
        if j < bytes.len() && matches!(bytes[j], b'+' | b'-') {
            j += 1;
        }
        if j < bytes.len() && bytes[j].is_ascii_digit() {
            *i = j;
            digits(i);
        }
    }
    let literal = &text[start..*i];
    literal
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .map(Tok::Number)
        .ok_or_else(|| {
            ParseError::new(
                ParseErrorKind::Syntax,
                start,
                format!("invalid number `{literal}`"),
            )
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<Tok> {
        tokenize(text).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_rule() {
        assert_eq!(
            toks("sum(Y >= 2, na_rm) >= 3"),
            vec![
                Tok::Ident("sum".into()),
                Tok::LParen,
                Tok::Ident("Y".into()),
                Tok::Ge,
                Tok::Number(2.0),
                Tok::Comma,
                Tok::Ident("na_rm".into()),
                Tok::RParen,
                Tok::Ge,
                Tok::Number(3.0),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn dot_alone_and_in_numbers() {
        assert_eq!(
            toks("nrow(.) .5 a.b"),
            vec![
                Tok::Ident("nrow".into()),
                Tok::LParen,
                Tok::Dot,
                Tok::RParen,
                Tok::Number(0.5),
                Tok::Ident("a.b".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn newlines_inside_parens_are_dropped() {
        assert_eq!(
            toks("f(a,\n b)\nx # note\n"),
            vec![
                Tok::Ident("f".into()),
                Tok::LParen,
                Tok::Ident("a".into()),
                Tok::Comma,
                Tok::Ident("b".into()),
                Tok::RParen,
                Tok::Newline,
                Tok::Ident("x".into()),
                Tok::Newline,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn bad_character_has_offset() {
        let err = tokenize("a $ b").unwrap_err();
        assert_eq!(err.offset, 2);
    }
}
