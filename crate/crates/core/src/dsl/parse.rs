//! Recursive-descent parser for piecewise definitions:
//!
//! ```text
//! fn       := piece (";" piece)* [";"]
//! piece    := "piece" interval ":" expr
//! interval := ("(" | "[") bound "," bound (")" | "]")
//! bound    := ["-"] number ["/" number] | "inf"
//! expr     := term (("+" | "-") term)*
//! term     := unary (("*" | "/") unary)*
//! unary    := "-" unary | atom
//! atom     := number | "x" | "(" expr ")"
//! ```
//!
//! Numbers are integers or decimals and are kept as exact rationals.

use num_traits::Zero;

use super::expr::{Expr, Rational};
use super::piecewise::{Piece, PiecewiseFn};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Sym(char),
}

struct Lexer;

impl Lexer {
    fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
        let bytes = src.as_bytes();
        let mut out = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                out.push((start, Tok::Num(parse_decimal(&src[start..i], start)?)));
            } else if c.is_ascii_alphabetic() {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
            } else if "()[],:;+-*/".contains(c) {
                out.push((i, Tok::Sym(c)));
                i += 1;
            } else {
                return Err(Error::Syntax {
                    pos: i,
                    msg: format!("unexpected character `{c}`"),
                });
            }
        }
        Ok(out)
    }
}

fn parse_decimal(text: &str, pos: usize) -> Result<Rational> {
    let err = |msg: &str| Error::Syntax {
        pos,
        msg: format!("{msg}: `{text}`"),
    };
    let (int_part, frac_part) = match text.split_once('.') {
        Some((a, b)) if !b.contains('.') => (a, b),
        Some(_) => return Err(err("malformed number")),
        None => (text, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    let numer: i64 = digits.parse().map_err(|_| err("number out of range"))?;
    let denom = u32::try_from(frac_part.len())
        .ok()
        .and_then(|e| 10i64.checked_pow(e))
        .ok_or_else(|| err("too many decimal places"))?;
    Ok(Rational::new(numer, denom))
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self> {
        Ok(Parser {
            toks: Lexer::tokenize(src)?,
            pos: 0,
            end: src.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            self.error(format!("expected `{c}`"))
        }
    }

    fn eat_ident(&mut self, name: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == name) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn function(&mut self) -> Result<Vec<Piece>> {
        let mut pieces = vec![self.piece()?];
        while self.eat_sym(';') {
            if self.at_end() {
                break;
            }
            pieces.push(self.piece()?);
        }
        if !self.at_end() {
            return self.error("expected `;` or end of input");
        }
        Ok(pieces)
    }

    fn piece(&mut self) -> Result<Piece> {
        if !self.eat_ident("piece") {
            return self.error("expected `piece`");
        }
        let start = self.offset();
        let lo_closed = if self.eat_sym('[') {
            true
        } else if self.eat_sym('(') {
            false
        } else {
            return self.error("expected `(` or `[`");
        };
        let lo = match self.bound()? {
            Some(r) => r,
            None => return self.error("lower bound cannot be `inf`"),
        };
        self.expect_sym(',')?;
        let hi = self.bound()?;
        let hi_closed = if self.eat_sym(']') {
            true
        } else if self.eat_sym(')') {
            false
        } else {
            return self.error("expected `)` or `]`");
        };
        self.expect_sym(':')?;
        let body = self.expr()?;
        Piece::new(lo, hi, lo_closed, hi_closed, body).map_err(|e| match e {
            Error::Argument(msg) => Error::Syntax { pos: start, msg },
            other => other,
        })
    }

    /// `None` stands for `inf`.
    fn bound(&mut self) -> Result<Option<Rational>> {
        if self.eat_ident("inf") {
            return Ok(None);
        }
        let negative = self.eat_sym('-');
        let mut value = self.number()?;
        if self.eat_sym('/') {
            let den = self.number()?;
            if den.is_zero() {
                return self.error("zero denominator in bound");
            }
            value /= den;
        }
        Ok(Some(if negative { -value } else { value }))
    }

    fn number(&mut self) -> Result<Rational> {
        match self.peek().cloned() {
            Some(Tok::Num(r)) => {
                self.pos += 1;
                Ok(r)
            }
            _ => self.error("expected a number"),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let node = if self.eat_sym('+') {
                Expr::Add
            } else if self.eat_sym('-') {
                Expr::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = node(Box::new(lhs), Box::new(rhs)).fold();
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let node = if self.eat_sym('*') {
                Expr::Mul
            } else if self.eat_sym('/') {
                Expr::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = node(Box::new(lhs), Box::new(rhs)).fold();
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_sym('-') {
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)).fold());
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(r)) => {
                self.pos += 1;
                Ok(Expr::constant(r))
            }
            Some(Tok::Ident(s)) if s == "x" => {
                self.pos += 1;
                Ok(Expr::Var)
            }
            Some(Tok::Ident(s)) => self.error(format!("unknown identifier `{s}`")),
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Some(_) => self.error("expected a number, `x` or `(`"),
            None => self.error("unexpected end of input"),
        }
    }
}

/// Parses a piecewise definition such as
/// `piece (0,1/3]: 1 - 2*x; piece (1/3,1]: 1/6`.
pub fn parse_piecewise(text: &str) -> Result<PiecewiseFn> {
    let mut p = Parser::new(text)?;
    if p.at_end() {
        return p.error("empty definition");
    }
    PiecewiseFn::new(p.function()?)
}

/// Parses a standalone expression body in `x`.
pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    if !p.at_end() {
        return p.error("trailing input");
    }
    Ok(e)
}

/// Parses a single rational written as `p/q`, `-p/q` or a decimal.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let mut p = Parser::new(text)?;
    let r = p.bound()?;
    if !p.at_end() {
        return p.error("trailing input");
    }
    r.ok_or_else(|| Error::Syntax {
        pos: 0,
        msg: "expected a finite rational".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn decimals_become_exact_rationals() {
        assert_eq!(parse_rational("0.75").unwrap(), r(3, 4));
        assert_eq!(parse_rational("-5/12").unwrap(), r(-5, 12));
        assert_eq!(parse_rational("7").unwrap(), r(7, 1));
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn constants_fold() {
        assert_eq!(parse_expr("5/12").unwrap(), Expr::constant(r(5, 12)));
        assert_eq!(parse_expr("-(1/2)").unwrap(), Expr::constant(r(-1, 2)));
        assert_eq!(parse_expr("5/12 - 1/24").unwrap(), Expr::constant(r(3, 8)));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("1 - 2*x").unwrap();
        assert_eq!(e.eval(0.25).unwrap(), 0.5);
        let e = parse_expr("x - 1 - 1").unwrap();
        assert_eq!(e.eval(3.0).unwrap(), 1.0);
        let e = parse_expr("x/(1+x)").unwrap();
        assert_eq!(e.eval(1.0).unwrap(), 0.5);
        let e = parse_expr("-x*2").unwrap();
        assert_eq!(e.eval(1.5).unwrap(), -3.0);
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_piecewise("piece (0,1]: 1 + ") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 17),
            other => panic!("{other:?}"),
        }
        match parse_piecewise("piece (0,1]: y") {
            Err(Error::Syntax { pos, msg }) => {
                assert_eq!(pos, 13);
                assert!(msg.contains('y'));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_piecewise("piece (inf,1]: x"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_piecewise("piece (1,0]: x"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_piecewise(""), Err(Error::Syntax { .. })));
        assert!(matches!(parse_piecewise("piece [0,1]: x $"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn affine_detection() {
        assert_eq!(parse_expr("1 - 2*x").unwrap().affine(), Some((r(-2, 1), r(1, 1))));
        assert_eq!(parse_expr("(x + 1)/4").unwrap().affine(), Some((r(1, 4), r(1, 4))));
        assert_eq!(parse_expr("x/(1+x)").unwrap().affine(), None);
        assert_eq!(parse_expr("x*x").unwrap().affine(), None);
    }
}
