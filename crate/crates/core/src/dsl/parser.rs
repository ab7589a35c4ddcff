//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)` and `x^-2` is `x^(-2)`. There is no implicit
//! multiplication.

use std::fmt;

use super::{Expression, Func};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {}, found {found}", .expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Caret => write!(f, "`^`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

fn syntax(offset: usize, expected: &[&str], found: impl fmt::Display) -> ParseError {
    ParseError::Syntax {
        offset,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found: found.to_string(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| syntax(start, &["number"], format!("`{text}`")))?;
                if !v.is_finite() {
                    return Err(syntax(start, &["finite number"], format!("`{text}`")));
                }
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, &["expression"], format!("`{ch}`")));
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a, S: AsRef<str>> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    names: &'a [S],
}

const OPERAND: [&str; 4] = ["number", "identifier", "`(`", "`-`"];

impl<S: AsRef<str>> Parser<'_, S> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = lhs + self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = lhs * self.unary()?;
                }
                Tok::Slash => {
                    self.bump();
                    lhs = lhs / self.unary()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expression, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(base.pow(exponent));
        }
        Ok(base)
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.offset(), &["`)`", "operator"], self.peek()))
        }
    }

    fn primary(&mut self) -> Result<Expression, ParseError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expression::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return Err(syntax(self.offset(), &["`(`"], self.peek()));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expression::call(f, arg));
                }
                if let Some(index) = self.names.iter().position(|n| n.as_ref() == name) {
                    return Ok(Expression::var(index, &name));
                }
                if name == "pi" {
                    return Ok(Expression::Num(std::f64::consts::PI));
                }
                Err(ParseError::UnknownIdentifier { name, offset })
            }
            other => Err(syntax(offset, &OPERAND, other)),
        }
    }
}

/// Parse `src` with variables resolved against `names` (index = position).
pub fn parse_with_names<S: AsRef<str>>(src: &str, names: &[S]) -> Result<Expression, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, names };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.offset(), &["operator", "end of input"], p.peek()));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    const XY: [&str; 2] = ["x1", "x2"];

    #[test]
    fn grammar_shape() {
        let e = parse_with_names("x1^2 + x2", &XY).unwrap();
        let expected = Expression::var(0, "x1").pow(Expression::num(2.0)) + Expression::var(1, "x2");
        assert_eq!(e, expected);
    }

    #[test]
    fn unbalanced_paren_offset() {
        let err = parse_with_names("sin(", &XY).unwrap_err();
        match err {
            ParseError::Syntax { offset, expected, .. } => {
                assert_eq!(offset, 4);
                assert!(expected.contains(&"identifier".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        let err = parse_with_names("x3", &XY).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                name: "x3".into(),
                offset: 0
            }
        );
    }

    #[test]
    fn implicit_multiplication_rejected() {
        let err = parse_with_names("2x1", &XY).unwrap_err();
        assert_eq!(err.offset(), 1);
    }

    #[test]
    fn power_binds_tighter_than_minus() {
        let e = parse_with_names("-x1^2", &XY).unwrap();
        assert_eq!(e, -(Expression::var(0, "x1").powi(2)));
        assert_eq!(e.eval_f64(&[3.0, 0.0]).unwrap(), -9.0);
        let e = parse_with_names("2^3^2", &XY).unwrap();
        assert_eq!(e.eval_f64(&[0.0, 0.0]).unwrap(), 512.0);
    }

    #[test]
    fn left_associative_subtraction() {
        let e = parse_with_names("x1 - x2 - 1", &XY).unwrap();
        assert_eq!(e.eval_f64(&[5.0, 2.0]).unwrap(), 2.0);
        let e = parse_with_names("8/x1/2", &XY).unwrap();
        assert_eq!(e.eval_f64(&[2.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn scientific_literals() {
        let e = parse_with_names("1.5e-3*x1 + .5E2", &XY).unwrap();
        assert!((e.eval_f64(&[1000.0, 0.0]).unwrap() - 51.5).abs() < 1e-12);
    }

    #[test]
    fn function_requires_parenthesis() {
        assert!(parse_with_names("sin x1", &XY).is_err());
        assert!(parse_with_names("x1 +", &XY).is_err());
        assert!(parse_with_names("(x1", &XY).is_err());
        assert!(parse_with_names("x1 $ 2", &XY).is_err());
    }
}
