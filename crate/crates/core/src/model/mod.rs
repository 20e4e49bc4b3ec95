//! Equations, symmetry generators, generator families and Lie algebras.

mod algebra;
mod catalog;
mod generator;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, Binding, EvalError, Expr, ParseError, Sampling};

pub use algebra::{jacobi_residual, structure_constants, LieAlgebra, StructureTable};
pub use catalog::{catalog_generator, catalog_names, cauchy_riemann_generator, family, generator_from_spec, translations};
pub use generator::{commutator, COORDS, Constraint, FamilyWitness, Generator, GeneratorFamily};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator `{generator}` needs parameter `{param}`")]
    MissingParameter { generator: String, param: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("malformed equation spec: {0}")]
    Spec(String),
    #[error("diffusivity not positive at u = {u}: D = {value}")]
    NonPositiveDiffusivity { u: f64, value: f64 },
    #[error("coefficient undefined on the u-domain: {0}")]
    Undefined(String),
}

fn default_u_domain() -> (f64, f64) {
    (0.5, 2.0)
}

/// One member of the class: the coefficients D, K1, K2, R as expressions in `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdcEquation {
    #[serde(rename = "D")]
    pub d: Expr,
    #[serde(rename = "K1")]
    pub k1: Expr,
    #[serde(rename = "K2")]
    pub k2: Expr,
    #[serde(rename = "R")]
    pub r: Expr,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Interval of `u` on which the coefficients are sampled.
    #[serde(default = "default_u_domain")]
    pub u_domain: (f64, f64),
}

impl RdcEquation {
    pub fn new(d: Expr, k1: Expr, k2: Expr, r: Expr) -> RdcEquation {
        RdcEquation { d, k1, k2, r, params: BTreeMap::new(), u_domain: default_u_domain() }
    }

    /// Parse four coefficient strings.
    pub fn parse(d: &str, k1: &str, k2: &str, r: &str) -> Result<RdcEquation, ModelError> {
        Ok(RdcEquation::new(parse(d)?, parse(k1)?, parse(k2)?, parse(r)?))
    }

    /// Parse `"D=...;K1=...;K2=...;R=...;params k=1, m=2"`. Missing K1, K2, R default to 0.
    pub fn from_spec(spec: &str) -> Result<RdcEquation, ModelError> {
        let mut eq = RdcEquation::new(Expr::one(), Expr::zero(), Expr::zero(), Expr::zero());
        let mut seen_d = false;
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some(rest) = part.strip_prefix("params") {
                for kv in rest.split([',', ' ']).map(str::trim).filter(|s| !s.is_empty()) {
                    let (k, v) = kv.split_once('=').ok_or_else(|| ModelError::Spec(format!("bad parameter `{kv}`")))?;
                    let v = parse(v.trim())?
                        .simplify()
                        .eval(&Binding::new())
                        .map_err(|e| ModelError::Spec(format!("parameter `{k}`: {e}")))?;
                    eq.params.insert(k.trim().to_string(), v);
                }
                continue;
            }
            let (k, v) = part.split_once('=').ok_or_else(|| ModelError::Spec(format!("expected NAME=EXPR in `{part}`")))?;
            let e = parse(v.trim())?;
            match k.trim() {
                "D" => {
                    eq.d = e;
                    seen_d = true;
                }
                "K1" => eq.k1 = e,
                "K2" => eq.k2 = e,
                "R" => eq.r = e,
                other => return Err(ModelError::Spec(format!("unknown coefficient `{other}`"))),
            }
        }
        if !seen_d {
            return Err(ModelError::Spec("missing D".into()));
        }
        Ok(eq)
    }

    pub fn to_spec(&self) -> String {
        let mut s = format!("D={};K1={};K2={};R={}", self.d, self.k1, self.k2, self.r);
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            s.push_str(";params ");
            s.push_str(&ps.join(","));
        }
        s
    }

    pub fn with_params(mut self, params: &[(&str, f64)]) -> RdcEquation {
        for (k, v) in params {
            self.params.insert(k.to_string(), *v);
        }
        self
    }

    pub fn with_u_domain(mut self, lo: f64, hi: f64) -> RdcEquation {
        self.u_domain = (lo, hi);
        self
    }

    /// Coefficients with parameters replaced by their values, simplified.
    pub fn bound(&self) -> [Expr; 4] {
        [&self.d, &self.k1, &self.k2, &self.r].map(|e| e.bind_params(&self.params).simplify())
    }

    pub fn coefficient_names() -> [&'static str; 4] {
        ["D", "K1", "K2", "R"]
    }

    /// Right-hand side as an expression in u and the jet coordinates u_x, u_y, u_xx, u_yy.
    pub fn rhs(&self) -> Expr {
        let [d, k1, k2, r] = self.bound();
        let dd = d.diff("u");
        let v = Expr::var;
        (d * (v("u_xx") + v("u_yy"))
            + dd * (v("u_x").powi(2) + v("u_y").powi(2))
            + k1 * v("u_x")
            + k2 * v("u_y")
            + r)
            .simplify()
    }

    /// Check D > 0 and that all coefficients are defined on the u-domain.
    pub fn check_domain(&self, samples: usize) -> Result<(), ModelError> {
        let [d, k1, k2, r] = self.bound();
        let (lo, hi) = self.u_domain;
        for i in 0..=samples {
            let u = lo + (hi - lo) * i as f64 / samples.max(1) as f64;
            let b: Binding = [("u".to_string(), u)].into_iter().collect();
            let dv = d.eval(&b).map_err(|e| ModelError::Undefined(format!("D: {e}")))?;
            if dv <= 0.0 {
                return Err(ModelError::NonPositiveDiffusivity { u, value: dv });
            }
            for (n, c) in [("K1", &k1), ("K2", &k2), ("R", &r)] {
                c.eval(&b).map_err(|e| ModelError::Undefined(format!("{n}: {e}")))?;
            }
        }
        Ok(())
    }

    /// The standard sampling box with this equation's u-domain and parameters.
    pub fn sampling(&self) -> Sampling {
        Sampling::standard().range("u", self.u_domain.0, self.u_domain.1).fix_all(&self.params)
    }

    /// Evaluate the four coefficients at a value of u.
    pub fn coefficients_at(&self, u: f64) -> Result<[f64; 4], EvalError> {
        let b: Binding = [("u".to_string(), u)].into_iter().chain(self.params.clone()).collect();
        Ok([self.d.eval(&b)?, self.k1.eval(&b)?, self.k2.eval(&b)?, self.r.eval(&b)?])
    }
}

/// A point of the second-order jet space on the solution manifold. `u_t` is never
/// stored; the mixed time derivatives are free coordinates there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JetPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub u_x: f64,
    pub u_y: f64,
    pub u_xx: f64,
    pub u_xy: f64,
    pub u_yy: f64,
    pub u_tx: f64,
    pub u_ty: f64,
    pub u_tt: f64,
}

impl JetPoint {
    pub fn from_binding(b: &Binding) -> JetPoint {
        let g = |n: &str| b.get(n).copied().unwrap_or(0.0);
        JetPoint {
            t: g("t"),
            x: g("x"),
            y: g("y"),
            u: g("u"),
            u_x: g("u_x"),
            u_y: g("u_y"),
            u_xx: g("u_xx"),
            u_xy: g("u_xy"),
            u_yy: g("u_yy"),
            u_tx: g("u_tx"),
            u_ty: g("u_ty"),
            u_tt: g("u_tt"),
        }
    }

    pub fn to_binding(&self) -> Binding {
        [
            ("t", self.t),
            ("x", self.x),
            ("y", self.y),
            ("u", self.u),
            ("u_x", self.u_x),
            ("u_y", self.u_y),
            ("u_xx", self.u_xx),
            ("u_xy", self.u_xy),
            ("u_yy", self.u_yy),
            ("u_tx", self.u_tx),
            ("u_ty", self.u_ty),
            ("u_tt", self.u_tt),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    pub fn is_finite(&self) -> bool {
        [self.t, self.x, self.y, self.u, self.u_x, self.u_y, self.u_xx, self.u_xy, self.u_yy]
            .iter()
            .all(|v| v.is_finite())
    }
}
