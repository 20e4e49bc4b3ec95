use std::collections::HashMap;

use thiserror::Error;

use super::{Expr, Func};

pub type Binding = HashMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unbound name `{0}`")]
    Unbound(String),
}

pub fn evaluate(e: &Expr, b: &Binding) -> Result<f64, EvalError> {
    let v = match e {
        Expr::Num(n) => n.to_f64(),
        Expr::Var(n) | Expr::Param(n) => *b.get(n).ok_or_else(|| EvalError::Unbound(n.clone()))?,
        Expr::Add(items) => {
            let mut s = 0.0;
            for it in items {
                s += evaluate(it, b)?;
            }
            s
        }
        Expr::Mul(items) => {
            let mut p = 1.0;
            for it in items {
                p *= evaluate(it, b)?;
            }
            p
        }
        Expr::Div(a, d) => {
            let den = evaluate(d, b)?;
            if den == 0.0 {
                return Err(EvalError::Domain("division by zero".into()));
            }
            evaluate(a, b)? / den
        }
        Expr::Pow(base, ex) => power(evaluate(base, b)?, ex, b)?,
        Expr::Func(f, a) => {
            let x = evaluate(a, b)?;
            match f {
                Func::Exp => x.exp(),
                Func::Ln => {
                    if x <= 0.0 {
                        return Err(EvalError::Domain(format!("ln of nonpositive value {x}")));
                    }
                    x.ln()
                }
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain(format!("non-finite value in `{}`", e.render())))
    }
}

fn power(base: f64, ex: &Expr, b: &Binding) -> Result<f64, EvalError> {
    let exact_int = match ex {
        Expr::Num(n) => n.as_integer(),
        _ => None,
    };
    let p = match exact_int {
        Some(n) => n as f64,
        None => evaluate(ex, b)?,
    };
    let integral = exact_int.is_some() || (p.fract() == 0.0 && p.abs() < 1e9);
    if integral {
        if base == 0.0 && p < 0.0 {
            return Err(EvalError::Domain("zero to a negative power".into()));
        }
        return Ok(base.powi(p as i32));
    }
    if base > 0.0 {
        Ok(base.powf(p))
    } else if base == 0.0 && p > 0.0 {
        Ok(0.0)
    } else {
        Err(EvalError::Domain(format!("{base} to the non-integer power {p}")))
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn at(pairs: &[(&str, f64)]) -> Binding {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn basic_values() {
        assert_eq!(parse("exp(u)").unwrap().eval(&at(&[("u", 0.0)])), Ok(1.0));
        assert_eq!(parse("u^k").unwrap().eval(&at(&[("u", 2.0), ("k", -1.0)])), Ok(0.5));
        assert!(matches!(parse("ln(u)").unwrap().eval(&at(&[("u", -1.0)])), Err(EvalError::Domain(_))));
        assert_eq!(parse("u + q").unwrap().eval(&at(&[("u", 1.0)])), Err(EvalError::Unbound("q".into())));
    }

    #[test]
    fn negative_base_integer_power() {
        assert_eq!(parse("x^3").unwrap().eval(&at(&[("x", -2.0)])), Ok(-8.0));
        assert!(parse("x^(1/2)").unwrap().eval(&at(&[("x", -2.0)])).is_err());
    }
}
