use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::expr::{numeric_equiv, Expr, Sampling};

/// Base coordinates in coefficient order.
pub const COORDS: [&str; 4] = ["t", "x", "y", "u"];

/// Point vector field `xi0 ∂t + xi1 ∂x + xi2 ∂y + eta ∂u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub xi0: Expr,
    pub xi1: Expr,
    pub xi2: Expr,
    pub eta: Expr,
}

impl Generator {
    pub fn new(name: &str, xi0: Expr, xi1: Expr, xi2: Expr, eta: Expr) -> Generator {
        Generator { name: name.to_string(), xi0, xi1, xi2, eta }
    }

    pub fn from_coeffs(name: &str, c: [Expr; 4]) -> Generator {
        let [a, b, c, d] = c;
        Generator::new(name, a, b, c, d)
    }

    pub fn zero() -> Generator {
        Generator::new("0", Expr::zero(), Expr::zero(), Expr::zero(), Expr::zero())
    }

    pub fn coeffs(&self) -> [&Expr; 4] {
        [&self.xi0, &self.xi1, &self.xi2, &self.eta]
    }

    pub fn map(&self, name: &str, f: impl Fn(&Expr) -> Expr) -> Generator {
        Generator::from_coeffs(name, self.coeffs().map(f))
    }

    pub fn simplify(&self) -> Generator {
        self.map(&self.name, Expr::simplify)
    }

    pub fn bind_params(&self, params: &BTreeMap<String, f64>) -> Generator {
        self.map(&self.name, |e| e.bind_params(params).simplify())
    }

    pub fn scale(&self, c: &Expr) -> Generator {
        self.map(&self.name, |e| (c.clone() * e.clone()).simplify())
    }

    /// `Σ c_i g_i`, simplified.
    pub fn combination(name: &str, terms: &[(Expr, &Generator)]) -> Generator {
        let mut out: [Vec<Expr>; 4] = Default::default();
        for (c, g) in terms {
            for (slot, e) in out.iter_mut().zip(g.coeffs()) {
                slot.push(c.clone() * e.clone());
            }
        }
        Generator::from_coeffs(name, out.map(|v| Expr::sum(v).simplify()))
    }

    pub fn plus(&self, other: &Generator) -> Generator {
        Generator::combination(&format!("{} + {}", self.name, other.name), &[(Expr::one(), self), (Expr::one(), other)])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs().iter().all(|e| e.is_zero())
    }

    pub fn free_names(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        for e in self.coeffs() {
            s.extend(e.free_names());
        }
        s
    }

    /// Apply the field to a function of (t, x, y, u).
    pub fn apply(&self, f: &Expr) -> Expr {
        let parts: Vec<Expr> = self.coeffs().iter().zip(COORDS).map(|(c, v)| (*c).clone() * f.diff(v)).collect();
        Expr::sum(parts).simplify()
    }

    /// Coefficient-wise numeric comparison.
    pub fn equivalent(&self, other: &Generator, s: &Sampling) -> bool {
        self.coeffs().iter().zip(other.coeffs()).all(|(a, b)| numeric_equiv(a, b, s).equivalent)
    }

    /// Pretty form like `2*t ∂t + x ∂x`.
    pub fn display(&self) -> String {
        let mut parts = Vec::new();
        for (c, v) in self.coeffs().iter().zip(COORDS) {
            if c.is_zero() {
                continue;
            }
            if c.is_one() {
                parts.push(format!("∂{v}"));
            } else {
                parts.push(format!("({c}) ∂{v}"));
            }
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// Lie bracket `[a, b]`, coefficient-wise `a(b_i) - b(a_i)`.
pub fn commutator(a: &Generator, b: &Generator) -> Generator {
    let name = format!("[{}, {}]", a.name, b.name);
    let ca = a.coeffs();
    let cb = b.coeffs();
    let out: Vec<Expr> = (0..4).map(|i| (a.apply(cb[i]) - b.apply(ca[i])).simplify()).collect();
    Generator::from_coeffs(&name, out.try_into().unwrap())
}

/// Auxiliary linear system the functional slot of a family must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Constraint {
    /// `b_t = b_xx + b_yy`
    HeatEquation,
    /// `b_t = b_xx + b_yy + sign * b`
    HeatWithLinearSource { sign: i8 },
    /// `A_x = B_y`, `A_y = -B_x`
    CauchyRiemann,
}

impl Constraint {
    /// Residual expressions of the auxiliary system for the slot functions.
    pub fn residuals(&self, f: &[Expr]) -> Vec<Expr> {
        match *self {
            Constraint::HeatEquation => {
                let b = &f[0];
                vec![(b.diff("t") - b.diff("x").diff("x") - b.diff("y").diff("y")).simplify()]
            }
            Constraint::HeatWithLinearSource { sign } => {
                let b = &f[0];
                let s = Expr::int(sign as i64);
                vec![(b.diff("t") - b.diff("x").diff("x") - b.diff("y").diff("y") - s * b.clone()).simplify()]
            }
            Constraint::CauchyRiemann => {
                let (a, b) = (&f[0], &f[1]);
                vec![(a.diff("x") - b.diff("y")).simplify(), (a.diff("y") + b.diff("x")).simplify()]
            }
        }
    }
}

/// One concrete instantiation of a family's functional slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyWitness {
    /// Slot functions: `[b]` or `[A, B]`.
    pub functions: Vec<Expr>,
    pub generator: Generator,
}

/// Infinite-dimensional part of an algebra: a template with a functional slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorFamily {
    pub name: String,
    pub template: String,
    pub constraint: Constraint,
    pub witnesses: Vec<FamilyWitness>,
}

impl GeneratorFamily {
    /// Largest absolute residual of the auxiliary system over all witnesses.
    pub fn witness_residual(&self, s: &Sampling) -> f64 {
        let mut worst: f64 = 0.0;
        for w in &self.witnesses {
            for r in self.constraint.residuals(&w.functions) {
                let rep = numeric_equiv(&r, &Expr::zero(), s);
                worst = worst.max(rep.max_deviation);
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn g(name: &str, c: [&str; 4]) -> Generator {
        Generator::from_coeffs(name, c.map(|s| parse(s).unwrap()))
    }

    #[test]
    fn bracket_of_time_translation_and_dilation() {
        let dt = g("dt", ["1", "0", "0", "0"]);
        let d0 = g("D0", ["2*t", "x", "y", "0"]);
        let b = commutator(&dt, &d0);
        assert_eq!(b.coeffs().map(|e| e.render()), ["2", "0", "0", "0"]);
    }

    #[test]
    fn antisymmetry() {
        let a = g("a", ["t^2", "t*x", "t*y", "-(t + (x^2+y^2)/4)*u"]);
        let b = g("b", ["0", "t", "0", "-(1/2)*x*u"]);
        let ab = commutator(&a, &b);
        let ba = commutator(&b, &a).scale(&Expr::int(-1));
        assert!(ab.equivalent(&ba, &Sampling::standard()));
    }

    #[test]
    fn constraint_residuals() {
        let heat = Constraint::HeatEquation.residuals(&[parse("x^2 + 2*t").unwrap()]);
        assert!(heat[0].is_zero());
        let cr = Constraint::CauchyRiemann.residuals(&[parse("x^2 - y^2").unwrap(), parse("2*x*y").unwrap()]);
        assert!(cr.iter().all(Expr::is_zero));
        let bad = Constraint::HeatWithLinearSource { sign: -1 }.residuals(&[parse("exp(t)").unwrap()]);
        assert!(!bad[0].is_zero());
    }
}
