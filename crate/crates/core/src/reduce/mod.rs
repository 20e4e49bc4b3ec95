//! Symmetry reduction and exact solutions: the invariant surface condition,
//! characteristic systems, residual checks of closed-form solutions, and the
//! worked reduction of the porous-Fisher-Burgers equation in [`porous`].

pub mod porous;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Binding, EvalError, Expr, Sampling};
use crate::model::{Generator, ModelError, RdcEquation};
use crate::prolong::ResidualReport;

pub use porous::{
    boussinesq_residual, boussinesq_solutions, compare_printed, lift_solution, printed_solutions, pullback_t001, reduce_demo,
    reduce_via_r1r2, regenerate, t0_equation, t1_equation, Ansatz, BoussinesqSolution, DemoReport, FormulaComparison,
    Reduction,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReduceError {
    #[error("template mismatch: {0}")]
    TemplateMismatch(String),
    #[error("undefined at {witness:?}: {message}")]
    Domain { message: String, witness: BTreeMap<String, f64> },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Sampling box for `t`, `x`, `y`.
pub type Box3 = BTreeMap<String, (f64, f64)>;

pub fn standard_box() -> Box3 {
    ["t", "x", "y"].iter().map(|n| (n.to_string(), (-1.0, 1.0))).collect()
}

/// A candidate exact solution `u(t, x, y)` of `target` on `domain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSolution {
    pub name: String,
    pub expression: Expr,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub target: RdcEquation,
    pub domain: Box3,
}

impl ClosedFormSolution {
    pub fn new(name: &str, expression: Expr, target: RdcEquation) -> ClosedFormSolution {
        ClosedFormSolution {
            name: name.to_string(),
            expression,
            parameters: BTreeMap::new(),
            target,
            domain: standard_box(),
        }
    }

    pub fn with_params(mut self, p: &[(&str, f64)]) -> ClosedFormSolution {
        self.parameters.extend(p.iter().map(|(k, v)| (k.to_string(), *v)));
        self
    }

    pub fn with_range(mut self, name: &str, lo: f64, hi: f64) -> ClosedFormSolution {
        self.domain.insert(name.to_string(), (lo, hi));
        self
    }

    /// The solution with its parameters substituted.
    pub fn bound(&self) -> Expr {
        self.expression.bind_params(&self.parameters).simplify()
    }
}

fn points(domain: &Box3, params: &BTreeMap<String, f64>, s: &Sampling) -> Vec<Binding> {
    let mut s = s.clone();
    for (k, r) in domain {
        s.ranges.insert(k.clone(), *r);
    }
    s.ranges.retain(|k, _| domain.contains_key(k));
    s.fixed.extend(params.clone());
    s.points(&domain.keys().cloned().collect())
}

/// The six terms of `u_t - [(D u_x)_x + (D u_y)_y + K1 u_x + K2 u_y + R]`
/// with `u` replaced by an explicit function.
pub fn pde_terms(eq: &RdcEquation, u: &Expr) -> [Expr; 6] {
    let [d, k1, k2, r] = eq.bound().map(|c| c.subs1("u", u));
    let (ux, uy) = (u.diff("x"), u.diff("y"));
    [
        u.diff("t"),
        -(d.clone() * ux.clone()).diff("x"),
        -(d * uy.clone()).diff("y"),
        -(k1 * ux).simplify(),
        -(k2 * uy).simplify(),
        -r.simplify(),
    ]
}

/// Symbolic PDE residual of `u` in `eq`.
pub fn pde_residual(eq: &RdcEquation, u: &Expr) -> Expr {
    Expr::sum(pde_terms(eq, u).to_vec()).simplify()
}

fn sum_and_scale(terms: &[Expr], b: &Binding) -> Result<(f64, f64), EvalError> {
    let mut sum = 0.0;
    let mut scale: f64 = 0.0;
    for t in terms {
        let v = t.eval(b)?;
        sum += v;
        scale = scale.max(v.abs());
    }
    Ok((sum, scale))
}

/// Residual check of a closed-form solution, symbolic and by central differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub name: String,
    pub symbolic: ResidualReport,
    /// Largest normalised residual of the finite-difference evaluation.
    pub finite_difference: f64,
    pub fd_step: f64,
    /// Symbolic and finite-difference evaluations agree to `FD_TOL`.
    pub oracle_agrees: bool,
    pub pass: bool,
}

pub const FD_TOL: f64 = 1e-5;
pub const SOLUTION_TOL: f64 = 1e-8;

fn fd_residual(eq: &RdcEquation, u: &Expr, b: &Binding, h: f64) -> Result<(f64, f64), EvalError> {
    let at = |dt: f64, dx: f64, dy: f64| -> Result<f64, EvalError> {
        let mut q = b.clone();
        for (n, d) in [("t", dt), ("x", dx), ("y", dy)] {
            *q.get_mut(n).expect("bound") += d;
        }
        u.eval(&q)
    };
    let [d, k1, k2, r] = eq.bound();
    let coef = |c: &Expr, v: f64| -> Result<f64, EvalError> {
        let mut q = b.clone();
        q.insert("u".into(), v);
        c.eval(&q)
    };
    let at_xy = |dx: f64, dy: f64| at(0.0, dx, dy);
    let flux_x = |sx: f64| -> Result<f64, EvalError> {
        let (p, m) = (at_xy(sx + h / 2.0, 0.0)?, at_xy(sx - h / 2.0, 0.0)?);
        Ok(coef(&d, (p + m) / 2.0)? * (p - m) / h)
    };
    let flux_y = |sy: f64| -> Result<f64, EvalError> {
        let (p, m) = (at_xy(0.0, sy + h / 2.0)?, at_xy(0.0, sy - h / 2.0)?);
        Ok(coef(&d, (p + m) / 2.0)? * (p - m) / h)
    };
    let u0 = at(0.0, 0.0, 0.0)?;
    let ut = (at(h, 0.0, 0.0)? - at(-h, 0.0, 0.0)?) / (2.0 * h);
    let ux = (at_xy(h, 0.0)? - at_xy(-h, 0.0)?) / (2.0 * h);
    let uy = (at_xy(0.0, h)? - at_xy(0.0, -h)?) / (2.0 * h);
    let dxx = (flux_x(h / 2.0)? - flux_x(-h / 2.0)?) / h;
    let dyy = (flux_y(h / 2.0)? - flux_y(-h / 2.0)?) / h;
    let terms = [ut, -dxx, -dyy, -coef(&k1, u0)? * ux, -coef(&k2, u0)? * uy, -coef(&r, u0)?];
    let sum: f64 = terms.iter().sum();
    let scale = terms.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok((sum, scale))
}

/// `u_t - F[u]` at sampled points of the solution's domain. The symbolic
/// residual decides `pass`; the central-difference value is an independent check.
pub fn verify_solution(eq: &RdcEquation, sol: &ClosedFormSolution, s: &Sampling) -> SolutionReport {
    let u = sol.bound();
    let terms = pde_terms(eq, &u).map(|t| t.bind_params(&eq.params).simplify());
    let pts = points(&sol.domain, &sol.parameters, s);
    let samples = pts.iter().map(|b| (b.clone(), sum_and_scale(&terms, b))).collect();
    let symbolic = ResidualReport::collect(&sol.name, SOLUTION_TOL, samples).compact();
    let h = 1e-4;
    let mut eqb = eq.clone();
    eqb.d = eqb.d.bind_params(&eq.params);
    eqb.k1 = eqb.k1.bind_params(&eq.params);
    eqb.k2 = eqb.k2.bind_params(&eq.params);
    eqb.r = eqb.r.bind_params(&eq.params);
    let mut fd: f64 = 0.0;
    let mut fd_ok = true;
    for b in pts.iter().take(20) {
        match fd_residual(&eqb, &u, b, h) {
            Ok((sum, scale)) => fd = fd.max(sum.abs() / scale.max(1.0)),
            Err(_) => fd_ok = false,
        }
    }
    let oracle_agrees = fd_ok && (symbolic.pass == (fd <= FD_TOL));
    SolutionReport {
        name: sol.name.clone(),
        pass: symbolic.pass,
        symbolic,
        finite_difference: fd,
        fd_step: h,
        oracle_agrees,
    }
}

/// Invariant surface condition `ξ0 u_t + ξ1 u_x + ξ2 u_y - η` along `u`.
pub fn invariance_of_solution(g: &Generator, u: &Expr, domain: &Box3, s: &Sampling) -> ResidualReport {
    let on = |e: &Expr| e.subs1("u", u);
    let terms = [
        (on(&g.xi0) * u.diff("t")).simplify(),
        (on(&g.xi1) * u.diff("x")).simplify(),
        (on(&g.xi2) * u.diff("y")).simplify(),
        (-on(&g.eta)).simplify(),
    ];
    let pts = points(domain, &BTreeMap::new(), s);
    let samples = pts.iter().map(|b| (b.clone(), sum_and_scale(&terms, b))).collect();
    ResidualReport::collect(&format!("{} on u", g.name), s.rtol, samples).compact()
}

/// `dt/ξ0 = dx/ξ1 = dy/ξ2 = du/η`, with zero denominators shown as `d· = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicSystem {
    pub generator: String,
    pub denominators: [String; 4],
    pub display: String,
}

pub fn characteristic_system(g: &Generator) -> CharacteristicSystem {
    let names = ["dt", "dx", "dy", "du"];
    let cs = g.coeffs().map(|c| c.simplify());
    let mut ratios = Vec::new();
    let mut zeros = Vec::new();
    for (n, c) in names.iter().zip(cs.iter()) {
        if c.is_zero() {
            zeros.push(format!("{n} = 0"));
        } else {
            ratios.push(format!("{n}/({})", c.render()));
        }
    }
    let mut parts = Vec::new();
    if !ratios.is_empty() {
        parts.push(ratios.join(" = "));
    }
    parts.extend(zeros);
    CharacteristicSystem {
        generator: g.name.clone(),
        denominators: cs.map(|c| c.render()),
        display: parts.join(", "),
    }
}

/// Galilei removal of constant convection: `u(t,x,y) = v(t, x + c1 t, y + c2 t)`.
pub fn galilei_lift(v: &Expr, c1: f64, c2: f64) -> Expr {
    let sh = |n: &str, c: f64| Expr::var(n) + Expr::real(c) * Expr::var("t");
    v.subs1("x", &sh("x", c1)).subs1("y", &sh("y", c2)).simplify()
}

#[cfg(test)]
mod tests;
