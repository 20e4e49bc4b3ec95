//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | atom ('^' factor)?
//! atom   := number | name | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! A parenthesised fraction of integers such as `(3/4)` or `(-1/3)` is read as
//! one exact rational literal, so rendered rationals parse back unchanged.

use num_rational::Rational64;
use thiserror::Error;

use super::{Expr, Func, Num};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { offset: usize, name: String },
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: String) -> ParseError {
        ParseError::Syntax { offset: self.pos, message }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let first = self.term()?;
        let mut items = vec![first];
        loop {
            if self.eat(b'+') {
                items.push(self.term()?);
            } else if self.eat(b'-') {
                let t = self.term()?;
                items.push(negate(t));
            } else {
                break;
            }
        }
        Ok(Expr::sum(items))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let leading_minus = self.peek() == Some(b'-');
        let mut acc = self.factor()?;
        // true while `acc` is a product built by this loop (or by a leading minus)
        let mut open_product = leading_minus && matches!(acc, Expr::Mul(_));
        loop {
            if self.eat(b'*') {
                let f = self.factor()?;
                match (&mut acc, open_product) {
                    (Expr::Mul(v), true) => v.push(f),
                    _ => {
                        acc = Expr::Mul(vec![acc, f]);
                        open_product = true;
                    }
                }
            } else if self.eat(b'/') {
                let f = self.factor()?;
                acc = Expr::Div(Box::new(acc), Box::new(f));
                open_product = false;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            let f = self.factor()?;
            return Ok(negate(f));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let e = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(e)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input".into())),
            Some(b'(') => {
                if let Some(r) = self.try_rational_literal() {
                    return Ok(Expr::Num(Num::Rat(r)));
                }
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`".into()));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
                if self.peek() == Some(b'(') {
                    let f = Func::from_name(&name).ok_or(ParseError::UnknownFunction {
                        offset: start,
                        name: name.clone(),
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.err("expected `)` after function argument".into()));
                    }
                    return Ok(Expr::func(f, arg));
                }
                Ok(Expr::sym(&name))
            }
            Some(c) => Err(self.err(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut decimal = false;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            decimal = true;
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                decimal = true;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if decimal {
            let v: f64 = text
                .parse()
                .map_err(|_| ParseError::Syntax { offset: start, message: format!("bad number `{text}`") })?;
            Ok(Expr::real(v))
        } else {
            let v: i64 = text
                .parse()
                .map_err(|_| ParseError::Syntax { offset: start, message: format!("bad integer `{text}`") })?;
            Ok(Expr::int(v))
        }
    }

    /// `( -? digits / digits )` as one literal; restores position on mismatch.
    fn try_rational_literal(&mut self) -> Option<Rational64> {
        let save = self.pos;
        let out = (|| {
            self.pos += 1;
            let neg = self.eat(b'-');
            let n = self.digits()?;
            if !self.eat(b'/') {
                return None;
            }
            let d = self.digits()?;
            if !self.eat(b')') || d == 0 {
                return None;
            }
            Some(Rational64::new(if neg { -n } else { n }, d))
        })();
        if out.is_none() {
            self.pos = save;
        }
        out
    }

    fn digits(&mut self) -> Option<i64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos || self.src.get(self.pos) == Some(&b'.') {
            return None;
        }
        std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
    }
}

/// Negation as the parser builds it: folded into a leading numeric factor.
fn negate(e: Expr) -> Expr {
    match e {
        Expr::Num(n) => Expr::Num(n.neg()),
        Expr::Mul(mut v) => {
            if let Some(Expr::Num(n)) = v.first().cloned() {
                v[0] = Expr::Num(n.neg());
            } else {
                v.insert(0, Expr::int(-1));
            }
            Expr::Mul(v)
        }
        other => Expr::Mul(vec![Expr::int(-1), other]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_of_parameter() {
        assert_eq!(parse("u^k").unwrap(), Expr::var("u").pow(Expr::param("k")));
    }

    #[test]
    fn product_of_functions() {
        let e = parse("exp(u)*cos(p*u)").unwrap();
        let expect = Expr::Mul(vec![
            Expr::exp(Expr::var("u")),
            Expr::cos(Expr::Mul(vec![Expr::param("p"), Expr::var("u")])),
        ]);
        assert_eq!(e, expect);
    }

    #[test]
    fn negative_exponent_without_parens() {
        assert_eq!(parse("u^-1").unwrap(), Expr::var("u").powi(-1));
    }

    #[test]
    fn rational_literal() {
        assert_eq!(parse("(3/4)").unwrap(), Expr::rat(3, 4));
        assert_eq!(parse("( -1 / 3 )").unwrap(), Expr::rat(-1, 3));
        assert!(matches!(parse("(3/x)").unwrap(), Expr::Div(_, _)));
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse("u + tan(u)"),
            Err(ParseError::UnknownFunction { offset: 4, name: "tan".into() })
        );
        match parse("u + * 2") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        assert!(parse("(u + 1").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn decimals_and_exponents() {
        assert_eq!(parse("2.5").unwrap(), Expr::real(2.5));
        assert_eq!(parse("1e-3").unwrap(), Expr::real(1e-3));
        assert_eq!(parse("2*exp(u)").unwrap().free_names().len(), 1);
    }
}
