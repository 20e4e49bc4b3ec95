//! Text rendering in the parser's grammar. Parenthesisation is chosen so that
//! `parse(render(e)) == e` for every tree produced by the parser.

use super::{Expr, Num};

pub fn render(e: &Expr) -> String {
    let mut s = String::new();
    sum_level(e, &mut s);
    s
}

fn num(n: &Num, out: &mut String) {
    match n {
        Num::Rat(r) => {
            if r.is_integer() {
                if *r.numer() < 0 {
                    out.push_str(&format!("({})", r.numer()));
                } else {
                    out.push_str(&r.numer().to_string());
                }
            } else {
                out.push_str(&format!("({}/{})", r.numer(), r.denom()));
            }
        }
        Num::Real(v) => {
            if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                out.push_str(&format!("(-{:?})", -v));
            } else {
                out.push_str(&format!("{v:?}"));
            }
        }
    }
}

/// Split a product with a negative leading coefficient into `(|c|, rest)` when
/// it can be written with a leading minus and parse back to the same tree.
fn minus_form(e: &Expr) -> Option<(Num, &[Expr])> {
    match e {
        Expr::Mul(v) if v.len() >= 2 => match (&v[0], &v[1]) {
            (Expr::Num(c), first) if c.is_negative() && !matches!(first, Expr::Mul(_) | Expr::Num(_)) => {
                Some((c.neg(), &v[1..]))
            }
            _ => None,
        },
        _ => None,
    }
}

fn product(items: &[Expr], out: &mut String) {
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            out.push('*');
        }
        wrap_if(matches!(it, Expr::Add(_) | Expr::Mul(_) | Expr::Div(_, _)), it, out);
    }
}

/// `|c|*rest` without the sign; a unit coefficient is omitted.
fn magnitude(c: Num, rest: &[Expr], out: &mut String) {
    if c.is_one() {
        if rest.len() == 1 {
            wrap_if(matches!(rest[0], Expr::Add(_)), &rest[0], out);
        } else {
            product(rest, out);
        }
    } else {
        num(&c, out);
        out.push('*');
        product(rest, out);
    }
}

fn sum_level(e: &Expr, out: &mut String) {
    match e {
        Expr::Add(items) => {
            for (i, it) in items.iter().enumerate() {
                if i == 0 {
                    wrap_if(matches!(it, Expr::Add(_)), it, out);
                } else if let Some(n) = it.as_num().filter(|n| n.is_negative()) {
                    out.push_str(" - ");
                    num(&n.neg(), out);
                } else if let Some((c, rest)) = minus_form(it) {
                    out.push_str(" - ");
                    magnitude(c, rest, out);
                } else {
                    out.push_str(" + ");
                    wrap_if(matches!(it, Expr::Add(_)), it, out);
                }
            }
        }
        _ => term_level(e, out),
    }
}

fn wrap_if(cond: bool, e: &Expr, out: &mut String) {
    if cond {
        out.push('(');
        sum_level(e, out);
        out.push(')');
    } else {
        sum_level(e, out);
    }
}

fn term_level(e: &Expr, out: &mut String) {
    match e {
        Expr::Mul(items) => match minus_form(e) {
            Some((c, rest)) => {
                out.push('-');
                magnitude(c, rest, out);
            }
            None => product(items, out),
        },
        Expr::Div(a, b) => {
            wrap_if(matches!(**a, Expr::Add(_)), a, out);
            out.push('/');
            wrap_if(matches!(**b, Expr::Add(_) | Expr::Mul(_) | Expr::Div(_, _)), b, out);
        }
        Expr::Pow(a, b) => {
            let atomic_base = matches!(**a, Expr::Var(_) | Expr::Param(_) | Expr::Func(_, _) | Expr::Num(_));
            wrap_if(!atomic_base, a, out);
            out.push('^');
            wrap_if(matches!(**b, Expr::Add(_) | Expr::Mul(_) | Expr::Div(_, _)), b, out);
        }
        Expr::Func(f, a) => {
            out.push_str(f.name());
            out.push('(');
            sum_level(a, out);
            out.push(')');
        }
        Expr::Num(n) => num(n, out),
        Expr::Var(n) | Expr::Param(n) => out.push_str(n),
        Expr::Add(_) => {
            out.push('(');
            sum_level(e, out);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;

    fn roundtrip(s: &str) {
        let e = parse(s).unwrap();
        let r = e.render();
        assert_eq!(parse(&r).unwrap(), e, "{s} rendered as {r}");
    }

    #[test]
    fn roundtrips() {
        for s in [
            "u^k",
            "4*(k+1)/k * u^k",
            "a - b*c + (-2) - (-1)*x",
            "-x + y",
            "a/b/c*d",
            "a/(b*c)",
            "(a*b)*c",
            "a*(b*c)",
            "a^b^c",
            "(a^b)^c",
            "u^-1",
            "-2^2",
            "exp(-u)*ln(u)",
            "(3/4)*u - 0.25 + 1e-12",
            "x - (y - z)",
            "(-1/3)^(1/2)",
            "sin(y + y0)^2",
            "-x*y + 3",
            "a - 3*x - (1/2)*y - 0.5",
            "-(x*y)*z",
            "(-(x*y))*z",
            "a - (x*y)",
            "-a/b",
            "a - a/b - -x",
            "-(a + b)*c",
            "(-1)*3",
            "x - (-1)*(y*z)",
        ] {
            roundtrip(s);
        }
    }

    #[test]
    fn readable_output() {
        assert_eq!(parse("a - b*c").unwrap().render(), "a - b*c");
        assert_eq!(parse("exp(m*u)*cos(p*u)").unwrap().render(), "exp(m*u)*cos(p*u)");
    }
}
