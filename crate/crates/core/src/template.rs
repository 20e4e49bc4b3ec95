//! Parameterised equation templates, restriction predicates and literal matching.
//!
//! A template is four coefficient strings with free parameters. Matching an
//! equation against a template enumerates the discrete parameters, seeds the
//! nonlinear continuous ones from logarithmic-derivative probes, refines all
//! continuous ones by Gauss-Newton, and confirms with `numeric_equiv`.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::num::snap_rational;
use crate::expr::{numeric_equiv, parse, Binding, Expr, ParseError};
use crate::model::RdcEquation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ParamKind {
    /// Any real; `representative` values are used for table re-checks.
    Continuous { representative: Vec<f64> },
    /// One of -1, 1.
    Sign,
    /// One of -1, 0, 1.
    Ternary,
    /// One of 0, 1.
    Binary,
    Fixed { value: f64 },
    /// An arbitrary function of u, stood in for by sample expressions.
    Function { representative: Vec<String> },
}

impl ParamKind {
    pub fn values(&self) -> Vec<f64> {
        match self {
            ParamKind::Continuous { representative } => representative.clone(),
            ParamKind::Sign => vec![-1.0, 1.0],
            ParamKind::Ternary => vec![-1.0, 0.0, 1.0],
            ParamKind::Binary => vec![0.0, 1.0],
            ParamKind::Fixed { value } => vec![*value],
            ParamKind::Function { .. } => vec![],
        }
    }

    fn is_discrete(&self) -> bool {
        matches!(self, ParamKind::Sign | ParamKind::Ternary | ParamKind::Binary | ParamKind::Fixed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("malformed restriction `{0}`")]
    Restriction(String),
    #[error("restriction `{restriction}` violated by {params:?}")]
    RestrictionViolated { restriction: String, params: BTreeMap<String, f64> },
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
}

/// Conjunction of disjunctions of `lhs == rhs` / `lhs != rhs` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Restriction {
    pub text: String,
    clauses: Vec<Vec<(Expr, bool, Expr)>>,
}

const PRED_TOL: f64 = 1e-9;

impl Restriction {
    pub fn parse(text: &str) -> Result<Restriction, TemplateError> {
        let mut clauses = Vec::new();
        for clause in text.split("&&").map(str::trim).filter(|c| !c.is_empty()) {
            let mut atoms = Vec::new();
            for atom in clause.split("||") {
                let (l, eq, r) = if let Some((l, r)) = atom.split_once("!=") {
                    (l, false, r)
                } else if let Some((l, r)) = atom.split_once("==") {
                    (l, true, r)
                } else {
                    return Err(TemplateError::Restriction(text.to_string()));
                };
                atoms.push((parse(l.trim())?, eq, parse(r.trim())?));
            }
            clauses.push(atoms);
        }
        Ok(Restriction { text: text.to_string(), clauses })
    }

    pub fn holds(&self, params: &BTreeMap<String, f64>) -> Result<bool, TemplateError> {
        let b: Binding = params.iter().map(|(k, v)| (k.clone(), *v)).collect();
        for clause in &self.clauses {
            let mut any = false;
            for (l, eq, r) in clause {
                let lv = l.eval(&b).map_err(|_| TemplateError::Restriction(self.text.clone()))?;
                let rv = r.eval(&b).map_err(|_| TemplateError::Restriction(self.text.clone()))?;
                let same = (lv - rv).abs() <= PRED_TOL * (1.0 + lv.abs().max(rv.abs()));
                if same == *eq {
                    any = true;
                    break;
                }
            }
            if !any {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl Serialize for Restriction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Restriction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Restriction::parse(&s).map_err(serde::de::Error::custom)
    }
}

fn no_restriction() -> Restriction {
    Restriction { text: String::new(), clauses: Vec::new() }
}

fn zero_string() -> String {
    "0".into()
}

/// Four coefficient templates with declared parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    #[serde(rename = "D")]
    pub d: String,
    #[serde(rename = "K1", default = "zero_string")]
    pub k1: String,
    #[serde(rename = "K2", default = "zero_string")]
    pub k2: String,
    #[serde(rename = "R", default = "zero_string")]
    pub r: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamKind>,
    #[serde(default = "no_restriction")]
    pub restrictions: Restriction,
}

/// Parameter assignment produced by matching: numbers plus function stand-ins.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Assignment {
    pub values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, Expr>,
}

impl Assignment {
    pub fn from_values(values: BTreeMap<String, f64>) -> Assignment {
        Assignment { values, functions: BTreeMap::new() }
    }
}

impl Template {
    fn exprs(&self) -> Result<[Expr; 4], TemplateError> {
        Ok([parse(&self.d)?, parse(&self.k1)?, parse(&self.k2)?, parse(&self.r)?])
    }

    pub fn function_params(&self) -> Vec<&str> {
        self.params
            .iter()
            .filter(|(_, k)| matches!(k, ParamKind::Function { .. }))
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn check_restrictions(&self, values: &BTreeMap<String, f64>) -> Result<(), TemplateError> {
        if self.restrictions.holds(values)? {
            Ok(())
        } else {
            Err(TemplateError::RestrictionViolated {
                restriction: self.restrictions.text.clone(),
                params: values.clone(),
            })
        }
    }

    /// The equation for a parameter assignment (coefficients fully bound).
    pub fn instantiate(&self, a: &Assignment) -> Result<RdcEquation, TemplateError> {
        for (name, kind) in &self.params {
            let present = match kind {
                ParamKind::Function { .. } => a.functions.contains_key(name),
                _ => a.values.contains_key(name),
            };
            if !present {
                return Err(TemplateError::MissingParameter(name.clone()));
            }
        }
        let subs: std::collections::HashMap<String, Expr> =
            a.functions.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let [d, k1, k2, r] = self.exprs()?.map(|e| e.substitute(&subs).bind_params(&a.values).simplify());
        let mut eq = RdcEquation::new(d, k1, k2, r);
        eq.params = BTreeMap::new();
        Ok(eq)
    }

    /// All representative assignments allowed by the restrictions.
    pub fn representative_assignments(&self) -> Vec<Assignment> {
        let mut out = vec![Assignment::default()];
        for (name, kind) in &self.params {
            let mut next = Vec::new();
            for a in &out {
                match kind {
                    ParamKind::Function { representative } => {
                        for f in representative {
                            let mut b = a.clone();
                            b.functions.insert(name.clone(), parse(f).expect("function stand-in parses"));
                            next.push(b);
                        }
                    }
                    k => {
                        for v in k.values() {
                            let mut b = a.clone();
                            b.values.insert(name.clone(), v);
                            next.push(b);
                        }
                    }
                }
            }
            out = next;
        }
        out.into_iter().filter(|a| self.restrictions.holds(&a.values).unwrap_or(false)).collect()
    }

    /// Match `eq` literally (no transformation). Returns the first assignment
    /// satisfying the restrictions.
    pub fn match_literal(&self, eq: &RdcEquation) -> Option<Assignment> {
        self.match_with(eq, &BTreeMap::new(), true)
    }

    /// Literal match where `hints` replace the probe seeds of the named
    /// continuous parameters. With `enforce == false` the restrictions are not
    /// checked, so callers can report matches that fall outside them.
    pub fn match_with(&self, eq: &RdcEquation, hints: &BTreeMap<String, Vec<f64>>, enforce: bool) -> Option<Assignment> {
        let target = eq.bound();
        let probes = Probes::of(&target, eq.u_domain);
        let mut exprs = self.exprs().ok()?;

        // Function parameters are matched by the coefficient they stand for.
        let mut functions = BTreeMap::new();
        for f in self.function_params() {
            let slot = exprs.iter().position(|e| *e == Expr::param(f))?;
            functions.insert(f.to_string(), target[slot].clone());
            exprs[slot] = target[slot].clone();
        }

        let discrete: Vec<(&String, Vec<f64>)> =
            self.params.iter().filter(|(_, k)| k.is_discrete()).map(|(n, k)| (n, k.values())).collect();
        let continuous: Vec<&String> =
            self.params.iter().filter(|(_, k)| matches!(k, ParamKind::Continuous { .. })).map(|(n, _)| n).collect();

        let us = sample_us(eq.u_domain, 12);
        let target_vals = eval_grid(&target, &us, &BTreeMap::new())?;

        for combo in cartesian(&discrete) {
            let fixed: BTreeMap<String, f64> = combo.clone();
            for seed in seeds(&continuous, &exprs, &probes, hints) {
                let Some(values) = refine(&exprs, &continuous, seed, &fixed, &us, &target_vals) else { continue };
                let mut all = fixed.clone();
                all.extend(values);
                if enforce && !self.restrictions.holds(&all).unwrap_or(false) {
                    continue;
                }
                let a = Assignment { values: all, functions: functions.clone() };
                if self.confirms(&a, eq) {
                    return Some(a);
                }
            }
        }
        None
    }

    fn confirms(&self, a: &Assignment, eq: &RdcEquation) -> bool {
        let Ok(inst) = self.instantiate(a) else { return false };
        let s = eq.sampling().with_samples(40).with_tol(1e-9, 1e-8);
        inst.bound().iter().zip(eq.bound().iter()).all(|(x, y)| numeric_equiv(x, y, &s).equivalent)
    }
}

fn sample_us((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

fn eval_grid(cs: &[Expr; 4], us: &[f64], params: &BTreeMap<String, f64>) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(4 * us.len());
    let mut b: Binding = params.iter().map(|(k, v)| (k.clone(), *v)).collect();
    for &u in us {
        b.insert("u".into(), u);
        for c in cs {
            out.push(c.eval(&b).ok()?);
        }
    }
    Some(out)
}

fn cartesian(items: &[(&String, Vec<f64>)]) -> Vec<BTreeMap<String, f64>> {
    let mut out = vec![BTreeMap::new()];
    for (name, vals) in items {
        let mut next = Vec::new();
        for m in &out {
            for v in vals {
                let mut m2 = m.clone();
                m2.insert((*name).clone(), *v);
                next.push(m2);
            }
        }
        out = next;
    }
    out
}

/// Logarithmic-derivative probes of the four coefficients, used as seeds.
#[derive(Debug, Clone, Default)]
pub struct Probes {
    pub d: Vec<f64>,
    pub k: Vec<f64>,
    pub phase: Vec<f64>,
    pub r: Vec<f64>,
}

impl Probes {
    pub fn of(c: &[Expr; 4], dom: (f64, f64)) -> Probes {
        let us = sample_us(dom, 5);
        let mut p = Probes::default();
        let scalar = |e: &Expr, out: &mut Vec<f64>| {
            let de = e.diff("u");
            for form in [Form::Power, Form::Exp] {
                if let Some(v) = constant_probe(&us, |u| {
                    let b = bind_u(u);
                    let (f, df) = (e.eval(&b).ok()?, de.eval(&b).ok()?);
                    (f != 0.0).then(|| form.rate(u, df / f))
                }) {
                    out.push(v);
                }
            }
        };
        scalar(&c[0], &mut p.d);
        scalar(&c[3], &mut p.r);
        // R minus its linear part, for templates like a*u^n + b*u.
        let rd = c[3].diff("u");
        scalar(&(c[3].clone() - Expr::var("u") * rd.subs1("u", &Expr::real(dom.0))).simplify(), &mut p.r);
        let amp = (c[1].clone().powi(2) + c[2].clone().powi(2)).simplify();
        let damp = amp.diff("u");
        for form in [Form::Power, Form::Exp] {
            if let Some(v) = constant_probe(&us, |u| {
                let b = bind_u(u);
                let (f, df) = (amp.eval(&b).ok()?, damp.eval(&b).ok()?);
                (f != 0.0).then(|| form.rate(u, df / (2.0 * f)))
            }) {
                p.k.push(v);
            }
            let (dk1, dk2) = (c[1].diff("u"), c[2].diff("u"));
            if let Some(v) = constant_probe(&us, |u| {
                let b = bind_u(u);
                let (k1, k2) = (c[1].eval(&b).ok()?, c[2].eval(&b).ok()?);
                let (d1, d2) = (dk1.eval(&b).ok()?, dk2.eval(&b).ok()?);
                let n = k1 * k1 + k2 * k2;
                (n != 0.0).then(|| form.rate(u, (k1 * d2 - k2 * d1) / n))
            }) {
                p.phase.push(v);
            }
        }
        p
    }

    fn all(&self) -> Vec<f64> {
        self.d.iter().chain(&self.k).chain(&self.phase).chain(&self.r).copied().collect()
    }
}

#[derive(Clone, Copy)]
enum Form {
    Power,
    Exp,
}

impl Form {
    fn rate(self, u: f64, logder: f64) -> f64 {
        match self {
            Form::Power => u * logder,
            Form::Exp => logder,
        }
    }
}

fn bind_u(u: f64) -> Binding {
    [("u".to_string(), u)].into_iter().collect()
}

/// The common value of `f` over the points, if it is constant.
pub fn constant_probe(us: &[f64], f: impl Fn(f64) -> Option<f64>) -> Option<f64> {
    let vals: Vec<f64> = us.iter().map(|&u| f(u)).collect::<Option<Vec<_>>>()?;
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let spread = vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    (spread <= 1e-8 * (1.0 + mean.abs())).then_some(mean)
}

fn is_linear_in(exprs: &[Expr; 4], p: &str) -> bool {
    exprs.iter().all(|e| e.diff(p).diff(p).simplify().is_zero())
}

/// Seed vectors for the continuous parameters.
fn seeds(
    names: &[&String],
    exprs: &[Expr; 4],
    probes: &Probes,
    hints: &BTreeMap<String, Vec<f64>>,
) -> Vec<BTreeMap<String, f64>> {
    let mut per: Vec<(&String, Vec<f64>)> = Vec::new();
    for n in names {
        let mut cands: Vec<f64> = if let Some(h) = hints.get(n.as_str()) {
            h.clone()
        } else if is_linear_in(exprs, n) {
            vec![0.5]
        } else {
            let src = match n.as_str() {
                "k" | "s" => probes.d.clone(),
                "p" => probes.phase.clone(),
                "m" => probes.k.iter().chain(&probes.r).copied().collect(),
                _ => probes.all(),
            };
            let mut c = src;
            // Derived exponents such as 2m - k + 1 need the raw probes too.
            c.extend(probes.all());
            c
        };
        cands.retain(|v| v.is_finite());
        cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cands.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        if cands.is_empty() {
            cands.push(0.5);
        }
        per.push((n, cands));
    }
    let mut combos = cartesian(&per);
    combos.truncate(400);
    combos
}

/// Gauss-Newton on the continuous parameters against the target grid.
fn refine(
    exprs: &[Expr; 4],
    names: &[&String],
    seed: BTreeMap<String, f64>,
    fixed: &BTreeMap<String, f64>,
    us: &[f64],
    target: &[f64],
) -> Option<BTreeMap<String, f64>> {
    let mut x: Vec<f64> = names.iter().map(|n| seed[*n]).collect();
    let resid = |x: &[f64]| -> Option<Vec<f64>> {
        let mut p = fixed.clone();
        for (n, v) in names.iter().zip(x) {
            p.insert((*n).clone(), *v);
        }
        let vals = eval_grid(exprs, us, &p)?;
        Some(vals.iter().zip(target).map(|(a, b)| a - b).collect())
    };
    let scale = 1.0 + target.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut r = resid(&x)?;
    for _ in 0..40 {
        let norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm <= 1e-11 * scale {
            break;
        }
        if names.is_empty() {
            return None;
        }
        let mut j = DMatrix::<f64>::zeros(r.len(), names.len());
        for c in 0..names.len() {
            let h = 1e-6 * (1.0 + x[c].abs());
            let mut xp = x.clone();
            xp[c] += h;
            let mut xm = x.clone();
            xm[c] -= h;
            let (rp, rm) = (resid(&xp)?, resid(&xm)?);
            for i in 0..r.len() {
                j[(i, c)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let step = j.svd(true, true).solve(&DVector::from_vec(r.clone()), 1e-12).ok()?;
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..10 {
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - lambda * s).collect();
            if let Some(rn) = resid(&xn) {
                let nn = rn.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if nn < norm {
                    x = xn;
                    r = rn;
                    improved = true;
                    break;
                }
            }
            lambda /= 2.0;
        }
        if !improved {
            break;
        }
    }
    // Snap to simple rationals when that keeps the fit.
    let snapped: Vec<f64> = x
        .iter()
        .map(|&v| snap_rational(v, 12, 1e-9).map(|q| *q.numer() as f64 / *q.denom() as f64).unwrap_or(v))
        .collect();
    let ok = |x: &[f64]| {
        resid(x).map(|r| r.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= 1e-9 * scale).unwrap_or(false)
    };
    let best = if ok(&snapped) {
        snapped
    } else if ok(&x) {
        x
    } else {
        return None;
    };
    Some(names.iter().map(|n| (*n).clone()).zip(best).collect())
}

/// Names used by a template's coefficient strings.
pub fn template_names(t: &Template) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    for c in [&t.d, &t.k1, &t.k2, &t.r] {
        if let Ok(e) = parse(c) {
            s.extend(e.free_names());
        }
    }
    s
}
