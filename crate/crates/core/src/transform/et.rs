//! Continuous equivalence transformations and the discrete ones.

use serde::{Deserialize, Serialize};

use super::point::PointTransformation;
use super::TransformError;
use crate::expr::Expr;
use crate::model::RdcEquation;

/// Parameters of one continuous equivalence transformation:
///
/// ```text
/// t' = e^θ0 t + m0
/// (x', y') = e^θ1 Rot(θ2) (x, y) + (g1, g2) t + (m1, m2)
/// u' = e^θ u + m
/// ```
///
/// `q1, q2` enter only the coefficient map for K. A genuine point
/// transformation has `q = g`; the extra pair is kept so the coefficient map can
/// be studied on its own.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EtParams {
    pub theta0: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub g1: f64,
    pub g2: f64,
    pub m: f64,
    pub q1: f64,
    pub q2: f64,
}

fn rot(a: f64, (x, y): (f64, f64)) -> (f64, f64) {
    (x * a.cos() - y * a.sin(), y * a.cos() + x * a.sin())
}

impl EtParams {
    pub fn identity() -> EtParams {
        EtParams::default()
    }

    /// Set `q = g`.
    pub fn genuine(mut self) -> EtParams {
        self.q1 = self.g1;
        self.q2 = self.g2;
        self
    }

    pub fn is_genuine(&self) -> bool {
        self.q1 == self.g1 && self.q2 == self.g2
    }

    pub fn scaling(theta0: f64, theta1: f64, theta: f64) -> EtParams {
        EtParams { theta0, theta1, theta, ..EtParams::default() }
    }

    pub fn rotation(theta2: f64) -> EtParams {
        EtParams { theta2, ..EtParams::default() }
    }

    pub fn u_shift(m: f64) -> EtParams {
        EtParams { m, ..EtParams::default() }
    }

    pub fn galilei(g1: f64, g2: f64) -> EtParams {
        EtParams { g1, g2, q1: g1, q2: g2, ..EtParams::default() }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &EtParams) -> EtParams {
        let (a, b) = (self, next);
        let s1 = b.theta1.exp();
        let lin = |va: (f64, f64), vb: (f64, f64)| {
            let r = rot(b.theta2, va);
            (s1 * r.0 + a.theta0.exp() * vb.0, s1 * r.1 + a.theta0.exp() * vb.1)
        };
        let (g1, g2) = lin((a.g1, a.g2), (b.g1, b.g2));
        let (q1, q2) = lin((a.q1, a.q2), (b.q1, b.q2));
        let r = rot(b.theta2, (a.m1, a.m2));
        EtParams {
            theta0: a.theta0 + b.theta0,
            theta1: a.theta1 + b.theta1,
            theta2: a.theta2 + b.theta2,
            theta: a.theta + b.theta,
            m0: b.theta0.exp() * a.m0 + b.m0,
            m1: s1 * r.0 + b.g1 * a.m0 + b.m1,
            m2: s1 * r.1 + b.g2 * a.m0 + b.m2,
            g1,
            g2,
            m: b.theta.exp() * a.m + b.m,
            q1,
            q2,
        }
    }

    pub fn inverse(&self) -> EtParams {
        let a = self;
        let back = |v: (f64, f64)| {
            let r = rot(-a.theta2, v);
            let s = -(-a.theta0 - a.theta1).exp();
            (s * r.0, s * r.1)
        };
        let (g1, g2) = back((a.g1, a.g2));
        let (q1, q2) = back((a.q1, a.q2));
        let rm = rot(-a.theta2, (a.m1, a.m2));
        let e1 = (-a.theta1).exp();
        let m0 = -(-a.theta0).exp() * a.m0;
        EtParams {
            theta0: -a.theta0,
            theta1: -a.theta1,
            theta2: -a.theta2,
            theta: -a.theta,
            m0,
            m1: -e1 * rm.0 - g1 * a.m0,
            m2: -e1 * rm.1 - g2 * a.m0,
            g1,
            g2,
            m: -(-a.theta).exp() * a.m,
            q1,
            q2,
        }
    }

    pub fn max_abs_diff(&self, o: &EtParams) -> f64 {
        let a = self.as_array();
        let b = o.as_array();
        let mut worst: f64 = 0.0;
        for i in 0..12 {
            let d = if i == 2 {
                // angles compare modulo 2π
                let d = (a[i] - b[i]).rem_euclid(std::f64::consts::TAU);
                d.min(std::f64::consts::TAU - d)
            } else {
                (a[i] - b[i]).abs()
            };
            worst = worst.max(d);
        }
        worst
    }

    pub fn as_array(&self) -> [f64; 12] {
        [
            self.theta0, self.theta1, self.theta2, self.theta, self.m0, self.m1, self.m2, self.g1, self.g2, self.m,
            self.q1, self.q2,
        ]
    }

    /// The point map on (t, x, y, u). Uses `g`; `q` plays no role here.
    pub fn point_transformation(&self) -> PointTransformation {
        let r = Expr::real;
        let (t, x, y, u) = (Expr::var("t"), Expr::var("x"), Expr::var("y"), Expr::var("u"));
        let (c, s, e1) = (self.theta2.cos(), self.theta2.sin(), self.theta1.exp());
        let tau = r(self.theta0.exp()) * t.clone() + r(self.m0);
        let xs = r(e1 * c) * x.clone() - r(e1 * s) * y.clone() + r(self.g1) * t.clone() + r(self.m1);
        let ys = r(e1 * c) * y + r(e1 * s) * x + r(self.g2) * t + r(self.m2);
        let v = r(self.theta.exp()) * u + r(self.m);
        let inv = self.inverse();
        let back = inv.point_parts();
        PointTransformation::new("ET", tau, xs, ys, v).with_inverse(back)
    }

    fn point_parts(&self) -> [Expr; 4] {
        let r = Expr::real;
        let (t, x, y, u) = (Expr::var("t"), Expr::var("x"), Expr::var("y"), Expr::var("u"));
        let (c, s, e1) = (self.theta2.cos(), self.theta2.sin(), self.theta1.exp());
        [
            (r(self.theta0.exp()) * t.clone() + r(self.m0)).simplify(),
            (r(e1 * c) * x.clone() - r(e1 * s) * y.clone() + r(self.g1) * t.clone() + r(self.m1)).simplify(),
            (r(e1 * c) * y + r(e1 * s) * x + r(self.g2) * t + r(self.m2)).simplify(),
            (r(self.theta.exp()) * u + r(self.m)).simplify(),
        ]
    }
}

/// Coefficients of the image equation.
///
/// `D' = e^(2θ1-θ0) D`, `K' = e^(-θ0) (e^θ1 Rot(θ2) K - q)`, `R' = e^(θ-θ0) R`,
/// all evaluated at `u = e^(-θ) (u' - m)`.
pub fn et_apply(eq: &RdcEquation, p: &EtParams) -> RdcEquation {
    let r = Expr::real;
    let [d, k1, k2, rr] = eq.bound();
    let arg = if p.theta == 0.0 && p.m == 0.0 {
        Expr::var("u")
    } else {
        (r((-p.theta).exp()) * (Expr::var("u") - r(p.m))).simplify()
    };
    let at = |e: Expr| e.subs1("u", &arg);
    let (d, k1, k2, rr) = (at(d), at(k1), at(k2), at(rr));
    let (c, s) = (p.theta2.cos(), p.theta2.sin());
    let e1 = p.theta1.exp();
    let e0 = (-p.theta0).exp();
    let nd = r((2.0 * p.theta1 - p.theta0).exp()) * d;
    let nk1 = r(e0 * e1 * c) * k1.clone() - r(e0 * e1 * s) * k2.clone() - r(e0 * p.q1);
    let nk2 = r(e0 * e1 * c) * k2 + r(e0 * e1 * s) * k1 - r(e0 * p.q2);
    let nr = r((p.theta - p.theta0).exp()) * rr;
    let (lo, hi) = eq.u_domain;
    let es = p.theta.exp();
    let mut out = RdcEquation::new(nd.simplify(), clean(nk1), clean(nk2), nr.simplify());
    out.u_domain = (es * lo + p.m, es * hi + p.m);
    out
}

/// Simplify and drop round-off constants such as `1e-17`.
fn clean(e: Expr) -> Expr {
    let s = e.simplify();
    match s.as_num() {
        Some(n) if n.to_f64().abs() < 1e-14 => Expr::zero(),
        _ => s,
    }
}

/// The discrete equivalence transformations of the class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscreteEt {
    FlipX,
    FlipY,
    FlipT,
    FlipU,
    SwapXY,
}

impl DiscreteEt {
    pub fn all() -> [DiscreteEt; 5] {
        [DiscreteEt::FlipX, DiscreteEt::FlipY, DiscreteEt::FlipT, DiscreteEt::FlipU, DiscreteEt::SwapXY]
    }

    pub fn point_transformation(self) -> PointTransformation {
        let v = Expr::var;
        let neg = |n: &str| Expr::int(-1) * v(n);
        let [t, x, y, u] = match self {
            DiscreteEt::FlipX => [v("t"), neg("x"), v("y"), v("u")],
            DiscreteEt::FlipY => [v("t"), v("x"), neg("y"), v("u")],
            DiscreteEt::FlipT => [neg("t"), v("x"), v("y"), v("u")],
            DiscreteEt::FlipU => [v("t"), v("x"), v("y"), neg("u")],
            DiscreteEt::SwapXY => [v("t"), v("y"), v("x"), v("u")],
        }
        .map(|e| e.simplify());
        // Every one of these is an involution.
        let inv = [t.clone(), x.clone(), y.clone(), u.clone()];
        PointTransformation::new(&format!("{self:?}"), t, x, y, u).with_inverse(inv)
    }
}

/// Apply a discrete transformation. Reversing time turns the diffusion term
/// into an anti-diffusion one, so it never maps the class (with D > 0) to itself.
pub fn discrete_et(eq: &RdcEquation, kind: DiscreteEt) -> Result<RdcEquation, TransformError> {
    let [d, k1, k2, r] = eq.bound();
    let neg = |e: Expr| (Expr::int(-1) * e).simplify();
    let out = match kind {
        DiscreteEt::FlipT => {
            return Err(TransformError::DomainViolation(
                "t -> -t gives u_t = -(D u_x)_x - ..., leaving the class since D > 0".into(),
            ))
        }
        DiscreteEt::FlipX => {
            let mut e = RdcEquation::new(d, neg(k1), k2, r);
            e.u_domain = eq.u_domain;
            e
        }
        DiscreteEt::FlipY => {
            let mut e = RdcEquation::new(d, k1, neg(k2), r);
            e.u_domain = eq.u_domain;
            e
        }
        DiscreteEt::SwapXY => {
            let mut e = RdcEquation::new(d, k2, k1, r);
            e.u_domain = eq.u_domain;
            e
        }
        DiscreteEt::FlipU => {
            let mu = Expr::int(-1) * Expr::var("u");
            let at = |e: Expr| e.subs1("u", &mu).simplify();
            let mut e = RdcEquation::new(at(d), at(k1), at(k2), neg(at(r)));
            e.u_domain = (-eq.u_domain.1, -eq.u_domain.0);
            e.check_domain(40).map_err(|err| TransformError::DomainViolation(format!("u -> -u: {err}")))?;
            e
        }
    };
    Ok(out)
}
