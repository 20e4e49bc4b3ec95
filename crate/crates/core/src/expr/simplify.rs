//! Light, rule-based simplification.
//!
//! Rules, applied bottom-up:
//! - numeric folding (exact for rationals, float when a decimal is involved);
//! - `0`/`1` identities for sums, products and powers;
//! - flattening of nested sums and products;
//! - like-term collection in sums, `c1*t + c2*t -> (c1+c2)*t`;
//! - `x^a * x^b -> x^(a+b)` and `exp(a)*exp(b) -> exp(a+b)` in products;
//! - `(x^a)^n -> x^(a*n)` and `(x*y)^n -> x^n*y^n` for integer `n`, `exp(z)^c -> exp(c*z)`;
//! - `a/b -> a*b^(-1)`, `ln(exp(z)) -> z`.
//!
//! No rule removes a point from the domain of definition; some rules extend it
//! (for example `x^(-1)*x -> 1`).

use std::collections::BTreeMap;

use super::{Expr, Func, Num};

pub fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => e.clone(),
        Expr::Func(f, a) => simp_func(*f, simplify(a)),
        Expr::Div(a, b) => simp_mul(vec![simplify(a), simp_pow(simplify(b), Expr::int(-1))]),
        Expr::Pow(a, b) => simp_pow(simplify(a), simplify(b)),
        Expr::Add(items) => simp_add(items.iter().map(simplify).collect()),
        Expr::Mul(items) => simp_mul(items.iter().map(simplify).collect()),
    }
}

fn simp_func(f: Func, a: Expr) -> Expr {
    if let Expr::Num(n) = a {
        match n {
            Num::Rat(_) if n.is_zero() => match f {
                Func::Exp | Func::Cos => return Expr::one(),
                Func::Sin => return Expr::zero(),
                Func::Ln => {}
            },
            Num::Rat(_) if n.is_one() && f == Func::Ln => return Expr::zero(),
            Num::Real(x) => {
                let v = match f {
                    Func::Exp => x.exp(),
                    Func::Ln if x > 0.0 => x.ln(),
                    Func::Ln => f64::NAN,
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                };
                if v.is_finite() {
                    return Expr::real(v);
                }
            }
            _ => {}
        }
    }
    if f == Func::Ln {
        if let Expr::Func(Func::Exp, z) = &a {
            return (**z).clone();
        }
    }
    Expr::func(f, a)
}

fn simp_pow(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        return Expr::one();
    }
    if b.is_one() {
        return a;
    }
    if a.is_one() {
        return Expr::one();
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        if let Some(n) = y.as_integer() {
            if let Some(v) = x.powi(n) {
                return Expr::Num(v);
            }
        } else if let (Num::Real(_), _) | (_, Num::Real(_)) = (x, y) {
            let v = x.to_f64().powf(y.to_f64());
            if x.to_f64() > 0.0 && v.is_finite() {
                return Expr::real(v);
            }
        }
        if x.is_zero() && !y.is_negative() {
            return Expr::zero();
        }
        return Expr::Pow(Box::new(a), Box::new(b));
    }
    let int_exp = b.as_num().and_then(|n| n.as_integer());
    match a {
        Expr::Pow(x, c) if int_exp.is_some() => {
            let ex = simp_mul(vec![(*c).clone(), b]);
            simp_pow(*x, ex)
        }
        Expr::Func(Func::Exp, z) if b.as_num().is_some() => simp_func(Func::Exp, simp_mul(vec![b, *z])),
        Expr::Mul(fs) if int_exp.is_some() => simp_mul(fs.into_iter().map(|f| simp_pow(f, b.clone())).collect()),
        a => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn flatten_mul(items: Vec<Expr>, out: &mut Vec<Expr>) {
    for it in items {
        match it {
            Expr::Mul(v) => flatten_mul(v, out),
            other => out.push(other),
        }
    }
}

fn simp_mul(items: Vec<Expr>) -> Expr {
    let mut flat = Vec::new();
    flatten_mul(items, &mut flat);

    let mut coef = Num::int(1);
    let mut exp_args: Vec<Expr> = Vec::new();
    // base key -> (base, exponent terms)
    let mut powers: BTreeMap<String, (Expr, Vec<Expr>)> = BTreeMap::new();
    for it in flat {
        match it {
            Expr::Num(n) => coef = coef.mul(n),
            Expr::Func(Func::Exp, z) => exp_args.push(*z),
            Expr::Pow(base, ex) => {
                let key = base.render();
                powers.entry(key).or_insert_with(|| ((*base).clone(), vec![])).1.push(*ex);
            }
            other => {
                let key = other.render();
                powers.entry(key).or_insert_with(|| (other, vec![])).1.push(Expr::one());
            }
        }
    }
    if coef.is_zero() {
        return Expr::zero();
    }

    let mut factors: Vec<Expr> = Vec::new();
    for (_, (base, exps)) in powers {
        let ex = simp_add(exps);
        match simp_pow(base, ex) {
            Expr::Num(n) => coef = coef.mul(n),
            Expr::Mul(fs) => {
                for f in fs {
                    match f {
                        Expr::Num(n) => coef = coef.mul(n),
                        f => factors.push(f),
                    }
                }
            }
            p => factors.push(p),
        }
    }
    if !exp_args.is_empty() {
        match simp_func(Func::Exp, simp_add(exp_args)) {
            Expr::Num(n) => coef = coef.mul(n),
            p => factors.push(p),
        }
    }
    if coef.is_zero() {
        return Expr::zero();
    }
    factors.sort_by_cached_key(|f| f.render());
    if factors.is_empty() {
        return Expr::Num(coef);
    }
    if !coef.is_one() {
        factors.insert(0, Expr::Num(coef));
    }
    Expr::product(factors)
}

fn flatten_add(items: Vec<Expr>, out: &mut Vec<Expr>) {
    for it in items {
        match it {
            Expr::Add(v) => flatten_add(v, out),
            other => out.push(other),
        }
    }
}

fn split_coef(e: Expr) -> (Num, Expr) {
    match e {
        Expr::Mul(mut fs) if matches!(fs.first(), Some(Expr::Num(_))) => {
            let c = fs.remove(0).as_num().unwrap();
            (c, Expr::product(fs))
        }
        other => (Num::int(1), other),
    }
}

fn simp_add(items: Vec<Expr>) -> Expr {
    let mut flat = Vec::new();
    flatten_add(items, &mut flat);

    let mut constant = Num::int(0);
    let mut terms: BTreeMap<String, (Num, Expr)> = BTreeMap::new();
    for it in flat {
        if let Expr::Num(n) = it {
            constant = constant.add(n);
            continue;
        }
        let (c, rest) = split_coef(it);
        let key = rest.render();
        let slot = terms.entry(key).or_insert((Num::int(0), rest));
        slot.0 = slot.0.add(c);
    }
    let mut out = Vec::new();
    for (_, (c, rest)) in terms {
        if c.is_zero() {
            continue;
        }
        if c.is_one() {
            out.push(rest);
        } else {
            match rest {
                Expr::Mul(mut fs) => {
                    fs.insert(0, Expr::Num(c));
                    out.push(Expr::Mul(fs));
                }
                r => out.push(Expr::Mul(vec![Expr::Num(c), r])),
            }
        }
    }
    if !constant.is_zero() || out.is_empty() {
        out.push(Expr::Num(constant));
    }
    Expr::sum(out)
}

#[cfg(test)]
mod tests {
    use super::super::{numeric_equiv, parse, Sampling};

    fn s(text: &str) -> String {
        parse(text).unwrap().simplify().render()
    }

    #[test]
    fn identities() {
        assert_eq!(s("1*u + 0"), "u");
        assert_eq!(s("u^1"), "u");
        assert_eq!(s("exp(u)*exp(-u)"), "1");
        assert_eq!(s("u^2*u^(-2)"), "1");
        assert_eq!(s("x*y - y*x"), "0");
        assert_eq!(s("2*u + 3*u"), "5*u");
        assert_eq!(s("(2/4)*u"), "(1/2)*u");
        assert_eq!(s("ln(exp(x + 1))"), "x + 1");
    }

    #[test]
    fn products_merge_powers() {
        assert_eq!(s("u^a*u^b"), s("u^(a+b)"));
        assert_eq!(s("(u^2)^3"), "u^6");
        assert_eq!(s("(2*u)^2"), "4*u^2");
    }

    #[test]
    fn quotient_becomes_negative_power() {
        assert_eq!(s("u/u"), "1");
        assert_eq!(s("4*(k+1)/k"), s("4*(k+1)*k^(-1)"));
    }

    #[test]
    fn exp_cancellation_is_numerically_sound() {
        let e = parse("exp(u)*exp(-u)").unwrap();
        let rep = numeric_equiv(&e, &e.simplify(), &Sampling::standard().with_samples(20));
        assert!(rep.equivalent);
    }
}
