//! Symbolic expression kernel.
//!
//! Expressions are immutable trees over named variables (`t`, `x`, `y`, `u`,
//! `w` and jet coordinates such as `u_x`) and named parameters. Numeric
//! literals are exact rationals unless they were written as decimals.
//!
//! The language is closed on purpose: sums, products, quotients, powers and
//! the four functions `exp`, `ln`, `sin`, `cos`.

mod diff;
mod eval;
pub mod num;
mod parse;
mod render;
pub mod sample;
mod simplify;

use std::collections::{BTreeSet, HashMap};
use std::ops;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

pub use eval::{Binding, EvalError};
pub use num::Num;
pub use parse::{parse, ParseError};
pub use sample::{numeric_equiv, EquivReport, Sampling, DEFAULT_SEED};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        match s {
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Num),
    Var(String),
    Param(String),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
}

/// Names treated as independent or dependent variables rather than parameters.
pub fn is_variable_name(name: &str) -> bool {
    matches!(name, "t" | "x" | "y" | "u" | "w") || name.starts_with("u_")
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Num(Num::int(n))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::Num(Num::Rat(Rational64::new(n, d)))
    }

    pub fn real(v: f64) -> Expr {
        Expr::Num(Num::Real(v))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    /// A name, classified as variable or parameter by [`is_variable_name`].
    pub fn sym(name: &str) -> Expr {
        if is_variable_name(name) {
            Expr::Var(name.to_string())
        } else {
            Expr::Param(name.to_string())
        }
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(name.to_string())
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        Expr::Func(f, Box::new(a))
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::func(Func::Exp, a)
    }

    pub fn ln(a: Expr) -> Expr {
        Expr::func(Func::Ln, a)
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::func(Func::Sin, a)
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::func(Func::Cos, a)
    }

    pub fn pow(self, e: Expr) -> Expr {
        Expr::Pow(Box::new(self), Box::new(e))
    }

    pub fn powi(self, n: i64) -> Expr {
        self.pow(Expr::int(n))
    }

    pub fn sum(items: Vec<Expr>) -> Expr {
        match items.len() {
            0 => Expr::zero(),
            1 => items.into_iter().next().unwrap(),
            _ => Expr::Add(items),
        }
    }

    pub fn product(items: Vec<Expr>) -> Expr {
        match items.len() {
            0 => Expr::one(),
            1 => items.into_iter().next().unwrap(),
            _ => Expr::Mul(items),
        }
    }

    pub fn as_num(&self) -> Option<Num> {
        match self {
            Expr::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(n) if n.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Num(n) if n.is_one())
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => vec![],
            Expr::Add(v) | Expr::Mul(v) => v.iter().collect(),
            Expr::Div(a, b) | Expr::Pow(a, b) => vec![a, b],
            Expr::Func(_, a) => vec![a],
        }
    }

    /// All variable and parameter names occurring in the tree.
    pub fn free_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(n) | Expr::Param(n) => {
                out.insert(n.clone());
            }
            _ => self.children().into_iter().for_each(|c| c.collect_names(out)),
        }
    }

    pub fn depends_on(&self, name: &str) -> bool {
        match self {
            Expr::Var(n) | Expr::Param(n) => n == name,
            _ => self.children().into_iter().any(|c| c.depends_on(name)),
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().into_iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Simultaneous substitution of names by expressions.
    pub fn substitute(&self, map: &HashMap<String, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Expr::Var(n) | Expr::Param(n) => map.get(n).cloned().unwrap_or_else(|| self.clone()),
            Expr::Num(_) => self.clone(),
            Expr::Add(v) => Expr::Add(v.iter().map(|c| c.substitute(map)).collect()),
            Expr::Mul(v) => Expr::Mul(v.iter().map(|c| c.substitute(map)).collect()),
            Expr::Div(a, b) => Expr::Div(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            Expr::Pow(a, b) => Expr::Pow(Box::new(a.substitute(map)), Box::new(b.substitute(map))),
            Expr::Func(f, a) => Expr::Func(*f, Box::new(a.substitute(map))),
        }
    }

    /// Convenience wrapper for a single replacement.
    pub fn subs1(&self, name: &str, by: &Expr) -> Expr {
        let mut m = HashMap::new();
        m.insert(name.to_string(), by.clone());
        self.substitute(&m)
    }

    /// Replace parameters by numeric literals (exact when the value is a simple rational).
    pub fn bind_params(&self, params: &std::collections::BTreeMap<String, f64>) -> Expr {
        let map: HashMap<String, Expr> = params
            .iter()
            .map(|(k, v)| (k.clone(), Expr::Num(num::literal_for(*v))))
            .collect();
        self.substitute(&map)
    }

    pub fn simplify(&self) -> Expr {
        simplify::simplify(self)
    }

    pub fn diff(&self, v: &str) -> Expr {
        diff::differentiate(self, v)
    }

    pub fn eval(&self, b: &Binding) -> Result<f64, EvalError> {
        eval::evaluate(self, b)
    }

    pub fn render(&self) -> String {
        render::render(self)
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render())
    }
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Expr, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Expr, ParseError> {
        parse(s)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        Expr::Add(vec![self, o])
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        Expr::Add(vec![self, -o])
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        Expr::Mul(vec![self, o])
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, o: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(o))
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Num(n) => Expr::Num(n.neg()),
            e => Expr::Mul(vec![Expr::int(-1), e]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_is_simultaneous() {
        let e = parse("x + 2*y").unwrap();
        let mut m = HashMap::new();
        m.insert("x".to_string(), Expr::var("y"));
        m.insert("y".to_string(), Expr::var("x"));
        let s = e.substitute(&m).simplify();
        let expect = parse("y + 2*x").unwrap().simplify();
        assert_eq!(s, expect);
    }

    #[test]
    fn empty_substitution_is_identity() {
        let e = parse("exp(m*u)*cos(p*u)").unwrap();
        assert_eq!(e.substitute(&HashMap::new()), e);
    }

    #[test]
    fn affine_substitution() {
        let e = Expr::var("u").subs1("u", &parse("M*u + N").unwrap());
        assert_eq!(e, parse("M*u + N").unwrap());
    }

    #[test]
    fn names() {
        let e = parse("u^k + exp(s*x)").unwrap();
        let names: Vec<_> = e.free_names().into_iter().collect();
        assert_eq!(names, vec!["k", "s", "u", "x"]);
        assert!(matches!(parse("u_xx").unwrap(), Expr::Var(_)));
        assert!(matches!(parse("gamma1").unwrap(), Expr::Param(_)));
    }
}
