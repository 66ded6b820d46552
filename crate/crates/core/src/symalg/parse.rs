//! Infix reader: `x^2 + sin(y)*z`, `1/(1 - 2*GM/r)`, `r^-2`.
//!
//! Grammar (lowest precedence first):
//! ```text
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?
//! primary := number | ident | ident "(" sum ")" | "(" sum ")"
//! ```
//! Exponents must reduce to an integer, or to 1/2 (read as `sqrt`).

use thiserror::Error;

use super::expr::{Expr, Func};
use crate::scalar::{parse_rational, ratio};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit()
            || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
        {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            out.push((start, Tok::Num(src[start..i].to_string())));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(ParseError {
                pos: i,
                msg: format!("unexpected character {c:?}"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.here(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.product()?];
        loop {
            if self.eat('+') {
                terms.push(self.product()?);
            } else if self.eat('-') {
                terms.push(Expr::neg(self.product()?));
            } else {
                return Ok(Expr::add(terms));
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat('*') {
                factors.push(self.unary()?);
            } else if self.eat('/') {
                let at = self.here();
                let d = self.unary()?;
                if d.is_zero() {
                    return Err(ParseError {
                        pos: at,
                        msg: "division by literal zero".into(),
                    });
                }
                factors.push(Expr::pow(d, -1));
            } else {
                return Ok(Expr::mul(factors));
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::neg(self.unary()?));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let at = self.here();
        let exponent = self.unary()?;
        match exponent.as_num() {
            Some(r) if r.is_integer() => {
                let k: i64 = r.to_integer().try_into().map_err(|_| ParseError {
                    pos: at,
                    msg: "exponent too large".into(),
                })?;
                if base.is_zero() && k < 0 {
                    return Err(ParseError {
                        pos: at,
                        msg: "negative power of zero".into(),
                    });
                }
                Ok(Expr::pow(base, k))
            }
            Some(r) if *r == ratio(1, 2) => Ok(Expr::sqrt(base)),
            Some(r) if *r == ratio(-1, 2) => Ok(Expr::pow(Expr::sqrt(base), -1)),
            _ => Err(ParseError {
                pos: at,
                msg: format!("exponent must be an integer, got {exponent}"),
            }),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.here();
        match self.peek().cloned() {
            Some(Tok::Num(text)) => {
                self.pos += 1;
                parse_rational(&text).map(Expr::Num).ok_or(ParseError {
                    pos: at,
                    msg: format!("bad number {text:?}"),
                })
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::Op('(')) {
                    let Some(f) = Func::from_name(&name) else {
                        return Err(ParseError {
                            pos: at,
                            msg: format!("unknown function {name:?}"),
                        });
                    };
                    self.pos += 1;
                    let arg = self.sum()?;
                    if !self.eat(')') {
                        return self.err("expected ')'");
                    }
                    Ok(Expr::apply(f, arg))
                } else {
                    Ok(Expr::sym(&name))
                }
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parse an infix expression into canonical form.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
    };
    let e = p.sum()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_conventional_infix() {
        let e = parse_expr("x^2 + sin(y)*z").unwrap();
        let expected = Expr::pow(Expr::sym("x"), 2) + Expr::sin(Expr::sym("y")) * Expr::sym("z");
        assert_eq!(e, expected);
        assert_eq!(
            parse_expr("-x^2").unwrap(),
            Expr::neg(Expr::pow(Expr::sym("x"), 2))
        );
        assert_eq!(parse_expr("r^-2").unwrap(), Expr::pow(Expr::sym("r"), -2));
        assert_eq!(parse_expr("2^3^2").unwrap(), Expr::int(512));
        assert_eq!(parse_expr("x^(1/2)").unwrap(), Expr::sqrt(Expr::sym("x")));
        assert_eq!(
            parse_expr("0.5*x").unwrap(),
            Expr::num(ratio(1, 2)) * Expr::sym("x")
        );
        assert_eq!(parse_expr("log(x)").unwrap(), Expr::ln(Expr::sym("x")));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_expr("x +").is_err());
        assert!(parse_expr("foo(x)").is_err());
        assert!(parse_expr("x^y").is_err());
        assert!(parse_expr("(x").is_err());
        assert!(parse_expr("1/0").is_err());
        assert!(parse_expr("x $ y").is_err());
        assert!(parse_expr("x y").is_err());
    }

    #[test]
    fn display_reparses() {
        for src in [
            "x^2 + sin(y)*z",
            "1/(1 - 2*GM/r)",
            "-3/4*x^-2*exp(x*y)",
            "sqrt(x)^3 - cos(t)^2/7",
        ] {
            let e = parse_expr(src).unwrap();
            let again = parse_expr(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }
}
