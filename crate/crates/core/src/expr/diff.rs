use super::{Expr, Func};

/// Exact derivative with respect to the name `v`; every other name is constant.
pub fn differentiate(e: &Expr, v: &str) -> Expr {
    raw(e, v).simplify()
}

fn raw(e: &Expr, v: &str) -> Expr {
    if !e.depends_on(v) {
        return Expr::zero();
    }
    match e {
        Expr::Num(_) => Expr::zero(),
        Expr::Var(n) | Expr::Param(n) => {
            if n == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Add(items) => Expr::sum(items.iter().filter(|c| c.depends_on(v)).map(|c| raw(c, v)).collect()),
        Expr::Mul(items) => {
            let mut terms = Vec::new();
            for (i, it) in items.iter().enumerate() {
                if !it.depends_on(v) {
                    continue;
                }
                let mut factors: Vec<Expr> =
                    items.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, f)| f.clone()).collect();
                factors.push(raw(it, v));
                terms.push(Expr::product(factors));
            }
            Expr::sum(terms)
        }
        Expr::Div(a, b) => {
            let num = raw(a, v) * (**b).clone() - (**a).clone() * raw(b, v);
            num / (**b).clone().powi(2)
        }
        Expr::Pow(a, b) => {
            let a = (**a).clone();
            let b = (**b).clone();
            if !b.depends_on(v) {
                let da = raw(&a, v);
                Expr::product(vec![b.clone(), a.pow(b - Expr::one()), da])
            } else if !a.depends_on(v) {
                Expr::product(vec![a.clone().pow(b.clone()), Expr::ln(a), raw(&b, v)])
            } else {
                let inner = raw(&b, v) * Expr::ln(a.clone()) + b.clone() * raw(&a, v) / a.clone();
                a.pow(b) * inner
            }
        }
        Expr::Func(f, a) => {
            let a = (**a).clone();
            let da = raw(&a, v);
            let outer = match f {
                Func::Exp => Expr::exp(a),
                Func::Ln => Expr::one() / a,
                Func::Sin => Expr::cos(a),
                Func::Cos => -Expr::sin(a),
            };
            outer * da
        }
    }
}
