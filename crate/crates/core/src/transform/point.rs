//! Point transformations of (t, x, y, u), their shape analysis and the
//! pushforward of generators.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TransformError;
use crate::expr::{Binding, Expr};
use crate::model::{Generator, COORDS};

/// `τ(t,x,y,u), x*(…), y*(…), v(…)` with an optional closed-form inverse that
/// writes the old coordinates in terms of the new ones. New coordinates reuse
/// the names `t, x, y, u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTransformation {
    pub name: String,
    pub tau: Expr,
    pub xs: Expr,
    pub ys: Expr,
    pub v: Expr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse: Option<[Expr; 4]>,
}

/// The pieces of a map of the form `τ = a(t)`, `x* = b1(t,x,y)`,
/// `y* = b2(t,x,y)`, `v = M(t,x,y) u + N(t,x,y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub a_dot: Expr,
    pub b1: Expr,
    pub b2: Expr,
    pub m: Expr,
    pub n: Expr,
}

impl PointTransformation {
    pub fn new(name: &str, tau: Expr, xs: Expr, ys: Expr, v: Expr) -> PointTransformation {
        PointTransformation {
            name: name.to_string(),
            tau: tau.simplify(),
            xs: xs.simplify(),
            ys: ys.simplify(),
            v: v.simplify(),
            inverse: None,
        }
    }

    pub fn with_inverse(mut self, inv: [Expr; 4]) -> PointTransformation {
        self.inverse = Some(inv.map(|e| e.simplify()));
        self
    }

    pub fn identity() -> PointTransformation {
        let v = Expr::var;
        PointTransformation::new("id", v("t"), v("x"), v("y"), v("u")).with_inverse([v("t"), v("x"), v("y"), v("u")])
    }

    pub fn components(&self) -> [&Expr; 4] {
        [&self.tau, &self.xs, &self.ys, &self.v]
    }

    pub fn bind_params(&self, p: &std::collections::BTreeMap<String, f64>) -> PointTransformation {
        PointTransformation {
            name: self.name.clone(),
            tau: self.tau.bind_params(p).simplify(),
            xs: self.xs.bind_params(p).simplify(),
            ys: self.ys.bind_params(p).simplify(),
            v: self.v.bind_params(p).simplify(),
            inverse: self.inverse.as_ref().map(|i| i.clone().map(|e| e.bind_params(p).simplify())),
        }
    }

    fn eval4(parts: [&Expr; 4], p: &[f64; 4]) -> Option<[f64; 4]> {
        let b: Binding = COORDS.iter().zip(p).map(|(n, v)| (n.to_string(), *v)).collect();
        let mut out = [0.0; 4];
        for (o, e) in out.iter_mut().zip(parts) {
            *o = e.eval(&b).ok()?;
        }
        Some(out)
    }

    /// Image of a point `(t, x, y, u)`.
    pub fn forward(&self, p: &[f64; 4]) -> Option<[f64; 4]> {
        Self::eval4(self.components(), p)
    }

    pub fn inverse_point(&self, p: &[f64; 4]) -> Option<[f64; 4]> {
        let inv = self.inverse.as_ref()?;
        Self::eval4([&inv[0], &inv[1], &inv[2], &inv[3]], p)
    }

    /// Largest round-trip error of the stored inverse over the given points.
    pub fn inverse_error(&self, pts: &[[f64; 4]]) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for p in pts {
            let back = self.inverse_point(&self.forward(p)?)?;
            for i in 0..4 {
                worst = worst.max((back[i] - p[i]).abs() / (1.0 + p[i].abs()));
            }
        }
        Some(worst)
    }

    /// Split into the restricted shape, or say which part breaks it.
    pub fn shape(&self) -> Result<Shape, TransformError> {
        let bad = |what: &str| Err(TransformError::ShapeViolation(format!("{}: {what}", self.name)));
        for v in ["x", "y", "u"] {
            if self.tau.depends_on(v) && !self.tau.diff(v).simplify().is_zero() {
                return bad(&format!("tau depends on {v}"));
            }
        }
        for (label, b) in [("x*", &self.xs), ("y*", &self.ys)] {
            if b.depends_on("u") && !b.diff("u").simplify().is_zero() {
                return bad(&format!("{label} depends on u"));
            }
        }
        let m = self.v.diff("u").simplify();
        if m.depends_on("u") && !m.diff("u").simplify().is_zero() {
            return bad("v is not affine in u");
        }
        let n = self.v.subs1("u", &Expr::zero()).simplify();
        Ok(Shape { a_dot: self.tau.diff("t").simplify(), b1: self.xs.clone(), b2: self.ys.clone(), m, n })
    }
}

/// Pushforward of a generator: the new coefficients are `X(τ), X(x*), X(y*),
/// X(v)` rewritten in the new coordinates through the inverse map.
pub fn pushforward(g: &Generator, pt: &PointTransformation) -> Result<Generator, TransformError> {
    let inv = pt.inverse.as_ref().ok_or_else(|| TransformError::InverseUnavailable(pt.name.clone()))?;
    let subs: HashMap<String, Expr> = COORDS.iter().map(|n| n.to_string()).zip(inv.iter().cloned()).collect();
    let coeffs = pt.components().map(|c| g.apply(c).substitute(&subs).simplify());
    Ok(Generator::from_coeffs(&g.name, coeffs))
}
