//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := base ('^' factor)?
//! base   := number | 'x' | ident '(' expr ')' | '(' expr ')'
//! ident  := sin | cos | exp | log | sqrt | tanh | abs
//! ```
//!
//! Negation sits below `^`, so `-x^2` is `-(x^2)`, and `^` is right
//! associative. A minus applied directly to a literal folds into a negative
//! constant.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: found {found}, expected one of {}", .expected.join(", "))]
    Syntax { offset: usize, found: String, expected: Vec<&'static str> },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("invalid number literal `{text}` at byte {offset}")]
    BadNumber { offset: usize, text: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::BadNumber { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    X,
    Func(UnaryOp),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Number(v) => write!(f, "number {v}"),
            Token::X => f.write_str("`x`"),
            Token::Func(op) => write!(f, "`{}`", op.name().unwrap_or("-")),
            Token::Plus => f.write_str("`+`"),
            Token::Minus => f.write_str("`-`"),
            Token::Star => f.write_str("`*`"),
            Token::Slash => f.write_str("`/`"),
            Token::Caret => f.write_str("`^`"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
            Token::End => f.write_str("end of input"),
        }
    }
}

const OPERAND: &[&str] = &["number", "x", "function", "(", "-"];

fn lex(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = text.as_bytes();
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
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'^' => Token::Caret,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| ParseError::BadNumber {
                    offset: start,
                    text: lit.to_string(),
                })?;
                out.push((start, Token::Number(v)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let name = &text[start..i];
                let tok = if name == "x" {
                    Token::X
                } else if let Some(op) = UnaryOp::from_name(name) {
                    Token::Func(op)
                } else {
                    return Err(ParseError::UnknownIdentifier { offset: start, name: name.to_string() });
                };
                out.push((start, tok));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    found: format!("character `{ch}`"),
                    expected: OPERAND.to_vec(),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((text.len(), Token::End));
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].1
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].0
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].1.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError::Syntax { offset: self.offset(), found: self.peek().to_string(), expected: expected.to_vec() }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinaryOp::Add,
                Token::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinaryOp::Mul,
                Token::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Arc::new(lhs), Arc::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Token::Minus {
            self.bump();
            let inner = self.factor()?;
            return Ok(match inner {
                Expr::Const(c) => Expr::Const(-c),
                other => Expr::Unary(UnaryOp::Neg, Arc::new(other)),
            });
        }
        let base = self.base()?;
        if *self.peek() == Token::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Token::Number(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Token::X => {
                self.bump();
                Ok(Expr::Var)
            }
            Token::Func(op) => {
                self.bump();
                self.expect(Token::LParen, "(")?;
                let arg = self.expr()?;
                self.expect(Token::RParen, ")")?;
                Ok(Expr::Unary(op, Arc::new(arg)))
            }
            Token::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Token::RParen, ")")?;
                Ok(inner)
            }
            _ => Err(self.error(OPERAND)),
        }
    }

    fn expect(&mut self, tok: Token, spelled: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else if spelled == ")" {
            Err(self.error(&[")", "+", "-", "*", "/", "^"]))
        } else {
            Err(self.error(&[spelled]))
        }
    }
}

/// Parses an expression in the variable `x`.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { tokens: lex(text)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Token::End {
        return Err(p.error(&["+", "-", "*", "/", "^", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pow(a: Expr, c: f64) -> Expr {
        Expr::Binary(BinaryOp::Pow, Arc::new(a), Arc::new(Expr::Const(c)))
    }

    #[test]
    fn single_productions() {
        assert_eq!(parse("x^2").unwrap(), pow(Expr::Var, 2.0));
        assert_eq!(
            parse("sin(x^2)").unwrap(),
            Expr::Unary(UnaryOp::Sin, Arc::new(pow(Expr::Var, 2.0)))
        );
    }

    #[test]
    fn unclosed_paren_reports_offset() {
        let err = parse("sin(").unwrap_err();
        assert_eq!(err.offset(), 4);
        assert!(matches!(err, ParseError::Syntax { .. }));
        let err = parse("sin(x").unwrap_err();
        assert_eq!(err.offset(), 5);
        match err {
            ParseError::Syntax { expected, .. } => assert!(expected.contains(&")")),
            _ => panic!(),
        }
    }

    #[test]
    fn unknown_identifier() {
        assert_eq!(
            parse("1 + foo(x)").unwrap_err(),
            ParseError::UnknownIdentifier { offset: 4, name: "foo".into() }
        );
        assert!(matches!(parse("y").unwrap_err(), ParseError::UnknownIdentifier { offset: 0, .. }));
    }

    #[test]
    fn precedence_and_associativity() {
        // -x^2 is -(x^2)
        assert_eq!(
            parse("-x^2").unwrap(),
            Expr::Unary(UnaryOp::Neg, Arc::new(pow(Expr::Var, 2.0)))
        );
        // right-assoc power with folded constant exponent
        assert_eq!(parse("x^3^2").unwrap(), pow(Expr::Var, 9.0));
        let e = parse("1-2-3").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), -4.0);
        let e = parse("8/4/2").unwrap();
        assert_eq!(e.eval(0.0).unwrap(), 1.0);
        let e = parse("2*x+3*x^2").unwrap();
        assert_eq!(e.eval(2.0).unwrap(), 16.0);
        assert_eq!(parse("x^-1").unwrap(), pow(Expr::Var, -1.0));
    }

    #[test]
    fn trailing_garbage() {
        let err = parse("x x").unwrap_err();
        assert_eq!(err.offset(), 2);
        assert!(parse("").is_err());
        assert!(parse("1..2").is_err());
        assert_eq!(parse("3 $").unwrap_err().offset(), 2);
    }
}
