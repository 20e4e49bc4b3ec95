//! Second prolongation of point vector fields and the invariance test on the
//! solution manifold.
//!
//! The invariance residual is the sum of six terms,
//! `η F_u + η^x F_{u_x} + η^y F_{u_y} + D η^{xx} + D η^{yy} - η^t`, evaluated
//! with `u_t` replaced by the right-hand side. A point passes when
//! `|Σ| <= tol * max(1, max |term|)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::expr::sample::JET_NAMES;
use crate::expr::{Binding, EvalError, Expr, Sampling};
use crate::model::{Generator, JetPoint, RdcEquation};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Total-derivative target of a jet coordinate: `u_x` under `D_y` is `u_xy`.
fn extend(name: &str, dir: char) -> Option<String> {
    let mut idx: Vec<char> = if name == "u" { vec![] } else { name.strip_prefix("u_")?.chars().collect() };
    idx.push(dir);
    idx.sort_by_key(|c| match c {
        't' => 0,
        'x' => 1,
        'y' => 2,
        _ => 3,
    });
    Some(format!("u_{}", idx.into_iter().collect::<String>()))
}

fn is_jet(name: &str) -> bool {
    name == "u" || name.starts_with("u_")
}

/// Total derivative of `f` along t, x or y.
pub fn total_derivative(f: &Expr, dir: char) -> Expr {
    let d = dir.to_string();
    let mut parts = vec![f.diff(&d)];
    for n in f.free_names() {
        if is_jet(&n) {
            if let Some(next) = extend(&n, dir) {
                parts.push(f.diff(&n) * Expr::var(&next));
            }
        }
    }
    Expr::sum(parts).simplify()
}

/// The base field and its six second-order prolongation coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProlongedField {
    pub generator: Generator,
    pub eta_t: Expr,
    pub eta_x: Expr,
    pub eta_y: Expr,
    pub eta_xx: Expr,
    pub eta_xy: Expr,
    pub eta_yy: Expr,
}

const DIRS: [char; 3] = ['t', 'x', 'y'];

fn first_order(g: &Generator, dir: char) -> Expr {
    let xis = [&g.xi0, &g.xi1, &g.xi2];
    let mut parts = vec![total_derivative(&g.eta, dir)];
    for (xi, d) in xis.iter().zip(DIRS) {
        let dxi = total_derivative(xi, dir);
        if !dxi.is_zero() {
            parts.push(-(Expr::var(&extend("u", d).unwrap()) * dxi));
        }
    }
    Expr::sum(parts).simplify()
}

fn second_order(g: &Generator, eta_i: &Expr, i: char, j: char) -> Expr {
    let xis = [&g.xi0, &g.xi1, &g.xi2];
    let ui = extend("u", i).unwrap();
    let mut parts = vec![total_derivative(eta_i, j)];
    for (xi, d) in xis.iter().zip(DIRS) {
        let dxi = total_derivative(xi, j);
        if !dxi.is_zero() {
            parts.push(-(Expr::var(&extend(&ui, d).unwrap()) * dxi));
        }
    }
    Expr::sum(parts).simplify()
}

pub fn prolong2(g: &Generator) -> ProlongedField {
    let eta_t = first_order(g, 't');
    let eta_x = first_order(g, 'x');
    let eta_y = first_order(g, 'y');
    let eta_xx = second_order(g, &eta_x, 'x', 'x');
    let eta_xy = second_order(g, &eta_x, 'x', 'y');
    let eta_yy = second_order(g, &eta_y, 'y', 'y');
    ProlongedField { generator: g.clone(), eta_t, eta_x, eta_y, eta_xx, eta_xy, eta_yy }
}

/// Symbolic pieces of the invariance test, prepared once per (equation, generator).
pub struct Criterion {
    rhs: Expr,
    terms: [Expr; 6],
}

impl Criterion {
    pub fn new(eq: &RdcEquation, g: &Generator) -> Criterion {
        let g = g.bind_params(&eq.params);
        let p = prolong2(&g);
        let [d, k1, k2, r] = eq.bound();
        let dd = d.diff("u");
        let ddd = dd.diff("u");
        let v = Expr::var;
        let f_u = (dd.clone() * (v("u_xx") + v("u_yy"))
            + ddd * (v("u_x").powi(2) + v("u_y").powi(2))
            + k1.diff("u") * v("u_x")
            + k2.diff("u") * v("u_y")
            + r.diff("u"))
        .simplify();
        let f_ux = (Expr::int(2) * dd.clone() * v("u_x") + k1).simplify();
        let f_uy = (Expr::int(2) * dd * v("u_y") + k2).simplify();
        let terms = [
            (g.eta.clone() * f_u).simplify(),
            (p.eta_x * f_ux).simplify(),
            (p.eta_y * f_uy).simplify(),
            (d.clone() * p.eta_xx).simplify(),
            (d * p.eta_yy).simplify(),
            (-p.eta_t).simplify(),
        ];
        Criterion { rhs: eq.rhs(), terms }
    }

    /// `(Σ terms, max |term|)` at a jet point, with `u_t` taken from the equation.
    pub fn evaluate(&self, b: &Binding) -> Result<(f64, f64), EvalError> {
        let mut b = b.clone();
        let ut = self.rhs.eval(&b)?;
        b.insert("u_t".into(), ut);
        let mut sum = 0.0;
        let mut scale: f64 = 0.0;
        for t in &self.terms {
            let v = t.eval(&b)?;
            sum += v;
            scale = scale.max(v.abs());
        }
        Ok((sum, scale))
    }
}

/// Raw invariance residual at one jet point.
pub fn invariance_residual(eq: &RdcEquation, g: &Generator, jp: &JetPoint) -> Result<f64, EvalError> {
    let mut b = jp.to_binding();
    b.extend(eq.params.clone());
    Criterion::new(eq, g).evaluate(&b).map(|(s, _)| s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub label: String,
    /// Largest normalised residual `|Σ| / max(1, scale)`.
    pub max_residual: f64,
    pub max_raw_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub points: usize,
    pub witness: Option<JetPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub residuals: Vec<f64>,
}

impl ResidualReport {
    pub fn collect(label: &str, tol: f64, samples: Vec<(Binding, Result<(f64, f64), EvalError>)>) -> ResidualReport {
        let mut rep = ResidualReport {
            label: label.to_string(),
            max_residual: 0.0,
            max_raw_residual: 0.0,
            tolerance: tol,
            pass: true,
            points: samples.len(),
            witness: None,
            error: None,
            residuals: Vec::with_capacity(samples.len()),
        };
        let mut worst = -1.0;
        for (b, r) in samples {
            match r {
                Ok((sum, scale)) => {
                    let norm = sum.abs() / scale.max(1.0);
                    rep.residuals.push(norm);
                    rep.max_raw_residual = rep.max_raw_residual.max(sum.abs());
                    rep.max_residual = rep.max_residual.max(norm);
                    if norm > tol && norm > worst {
                        worst = norm;
                        rep.witness = Some(JetPoint::from_binding(&b));
                    }
                }
                Err(e) => {
                    rep.residuals.push(f64::INFINITY);
                    rep.max_residual = f64::INFINITY;
                    if rep.error.is_none() {
                        rep.error = Some(e.to_string());
                        rep.witness = Some(JetPoint::from_binding(&b));
                        worst = f64::INFINITY;
                    }
                }
            }
        }
        rep.pass = rep.max_residual <= tol;
        rep
    }

    /// Drop the per-point list (for compact JSON).
    pub fn compact(mut self) -> ResidualReport {
        self.residuals.clear();
        self
    }
}

fn jet_points(eq: &RdcEquation, s: &Sampling) -> Vec<Binding> {
    let mut names: BTreeSet<String> = ["t", "x", "y", "u"].iter().map(|s| s.to_string()).collect();
    names.extend(JET_NAMES.iter().filter(|n| **n != "u_t").map(|s| s.to_string()));
    let mut s = s.clone();
    s.ranges.insert("u".into(), eq.u_domain);
    s.fixed.extend(eq.params.clone());
    s.points(&names)
        .into_iter()
        .map(|mut p| {
            p.remove("u_t");
            p
        })
        .collect()
}

/// Invariance test over sampled jet points. `s.rtol` is the relative tolerance.
pub fn is_symmetry(eq: &RdcEquation, g: &Generator, s: &Sampling) -> ResidualReport {
    let crit = Criterion::new(eq, g);
    let samples = jet_points(eq, s)
        .into_iter()
        .map(|b| {
            let r = crit.evaluate(&b);
            (b, r)
        })
        .collect();
    ResidualReport::collect(&g.name, s.rtol, samples)
}

/// Determining-equation residual expressions, labelled.
pub fn determining_equations(eq: &RdcEquation, g: &Generator) -> Vec<(&'static str, Vec<(Expr, Expr)>)> {
    let g = g.bind_params(&eq.params);
    let [d, k1, k2, r] = eq.bound();
    let (xi0, xi1, xi2, eta) = (&g.xi0, &g.xi1, &g.xi2, &g.eta);
    let dv = |e: &Expr, v: &str| e.diff(v);
    let dd = d.diff("u");
    let a = eta.diff("u");
    let xi1x = dv(xi1, "x");
    let xi0t = dv(xi0, "t");
    let xi2x = dv(xi2, "x");
    let two = || Expr::int(2);
    let fixed_shape = vec![
        (dv(xi0, "x"), Expr::zero()),
        (dv(xi0, "y"), Expr::zero()),
        (dv(xi0, "u"), Expr::zero()),
        (dv(xi1, "u"), Expr::zero()),
        (dv(xi2, "u"), Expr::zero()),
        (eta.diff("u").diff("u"), Expr::zero()),
    ];
    let conformal = vec![(xi1x.clone(), dv(xi2, "y")), (xi2x.clone() + dv(xi1, "y"), Expr::zero())];
    let diffusion = vec![(eta.clone() * dd.clone(), (two() * xi1x.clone() - xi0t.clone()) * d.clone())];
    let convection_x = vec![(
        eta.clone() * k1.diff("u"),
        (xi1x.clone() - xi0t.clone()) * k1.clone()
            - xi2x.clone() * k2.clone()
            - two() * eta.diff("x").diff("u") * d.clone()
            - two() * eta.diff("x") * dd.clone()
            - dv(xi1, "t"),
    )];
    let convection_y = vec![(
        eta.clone() * k2.diff("u"),
        xi2x * k1.clone() + (xi1x - xi0t.clone()) * k2.clone()
            - two() * eta.diff("y").diff("u") * d.clone()
            - two() * eta.diff("y") * dd
            - dv(xi2, "t"),
    )];
    let lap = eta.diff("x").diff("x") + eta.diff("y").diff("y");
    let reaction = vec![(
        eta.clone() * r.diff("u"),
        (a - xi0t) * r - lap * d - eta.diff("x") * k1 - eta.diff("y") * k2 + eta.diff("t"),
    )];
    vec![("u-independence", fixed_shape), ("conformality", conformal), ("diffusion", diffusion), ("convection-x", convection_x), ("convection-y", convection_y), ("reaction", reaction)]
}

/// One report per determining equation; each residual is `|lhs - rhs| / max(1, |lhs|, |rhs|)`.
pub fn determining_residuals(eq: &RdcEquation, g: &Generator, s: &Sampling) -> Vec<ResidualReport> {
    let pts = jet_points(eq, s);
    determining_equations(eq, g)
        .into_iter()
        .map(|(label, pairs)| {
            let pairs: Vec<(Expr, Expr)> = pairs.into_iter().map(|(l, r)| (l.simplify(), r.simplify())).collect();
            let samples = pts
                .iter()
                .map(|b| {
                    let mut worst: (f64, f64) = (0.0, 0.0);
                    for (l, r) in &pairs {
                        let res = (|| -> Result<(f64, f64), EvalError> {
                            let (lv, rv) = (l.eval(b)?, r.eval(b)?);
                            Ok((lv - rv, lv.abs().max(rv.abs())))
                        })();
                        match res {
                            Ok((diff, scale)) => {
                                if diff.abs() / scale.max(1.0) > worst.0 / worst.1.max(1.0) {
                                    worst = (diff.abs(), scale);
                                }
                            }
                            Err(e) => return (b.clone(), Err(e)),
                        }
                    }
                    (b.clone(), Ok(worst))
                })
                .collect();
            ResidualReport::collect(label, s.rtol, samples)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::model::catalog_generator;

    fn gen(name: &str) -> Generator {
        catalog_generator(name, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn jet_extension() {
        assert_eq!(extend("u", 'x').unwrap(), "u_x");
        assert_eq!(extend("u_y", 'x').unwrap(), "u_xy");
        assert_eq!(extend("u_x", 't').unwrap(), "u_tx");
    }

    #[test]
    fn translation_prolongs_to_zero() {
        let p = prolong2(&gen("dt"));
        for e in [&p.eta_t, &p.eta_x, &p.eta_y, &p.eta_xx, &p.eta_xy, &p.eta_yy] {
            assert!(e.is_zero());
        }
    }

    #[test]
    fn scaling_prolongs_linearly() {
        let p = prolong2(&gen("I"));
        assert_eq!(p.eta_x.render(), "u_x");
        assert_eq!(p.eta_xx.render(), "u_xx");
        assert_eq!(p.eta_t.render(), "u_t");
    }

    #[test]
    fn heat_equation_projective() {
        let heat = RdcEquation::from_spec("D=1").unwrap();
        let rep = is_symmetry(&heat, &gen("Pi"), &heat.sampling());
        assert!(rep.pass, "{rep:?}");
        assert!(rep.witness.is_none());
    }

    #[test]
    fn burgers_rotation_fails() {
        let eq = RdcEquation::from_spec("D=1;K1=u").unwrap();
        let rep = is_symmetry(&eq, &gen("J12"), &eq.sampling());
        assert!(!rep.pass);
        assert!(rep.witness.is_some());
    }

    #[test]
    fn reaction_breaks_scaling() {
        let eq = RdcEquation::from_spec("D=1;R=u^2").unwrap();
        let reps = determining_residuals(&eq, &gen("I"), &eq.sampling());
        let reaction = reps.iter().find(|r| r.label == "reaction").unwrap();
        assert!(!reaction.pass);
        assert!(reps.iter().filter(|r| r.label != "reaction").all(|r| r.pass));
    }
}
