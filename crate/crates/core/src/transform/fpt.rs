//! Form-preserving transformations: the sufficient conditions, an independent
//! transport check, the catalog of known maps and their application.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::point::{PointTransformation, Shape};
use super::TransformError;
use crate::expr::{parse, Binding, EvalError, Expr, Sampling};
use crate::model::RdcEquation;
use crate::prolong::ResidualReport;
use crate::template::{Assignment, ParamKind, Restriction, Template};

const NONDEGENERATE_TOL: f64 = 1e-12;

/// Outcome of checking one point transformation between two equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FptReport {
    pub name: String,
    /// `conformal` or `anticonformal` when the spatial part passes.
    pub orientation: Option<String>,
    pub conditions: Vec<ResidualReport>,
    /// Residual comparison on a manufactured field; absent without an inverse.
    pub transport: Option<ResidualReport>,
    pub pass: bool,
}

impl FptReport {
    pub fn failures(&self) -> Vec<&ResidualReport> {
        self.conditions.iter().chain(self.transport.iter()).filter(|r| !r.pass).collect()
    }
}

struct Pieces {
    shape: Shape,
    src: [Expr; 4],
    /// Target coefficients evaluated at `v = M u + N`.
    dst_at_v: [Expr; 4],
}

fn d(e: &Expr, v: &str) -> Expr {
    e.diff(v).simplify()
}

/// The class-preserving conditions as `(lhs, rhs)` pairs.
fn conditions(p: &Pieces) -> Vec<(&'static str, Expr, Expr)> {
    let Shape { a_dot, b1, b2, m, n } = &p.shape;
    let [dd, k1, k2, r] = p.src.clone();
    let [td, tk1, tk2, tr] = p.dst_at_v.clone();
    let u = Expr::var("u");
    let aff = |dir: &str| (d(m, dir) * u.clone() + d(n, dir)).simplify();
    let (ax, ay) = (aff("x"), aff("y"));
    let conv = |b: &Expr| {
        let inner = (d(b, "x") * ax.clone() + d(b, "y") * ay.clone()) * dd.clone();
        let lhs = d(b, "t") + Expr::int(2) / m.clone() * inner.diff("u") - d(b, "x") * k1.clone() - d(b, "y") * k2.clone();
        (lhs.simplify(), (Expr::int(-1) * a_dot.clone() * tk1.clone()).simplify())
    };
    let conv2 = |b: &Expr| {
        let inner = (d(b, "x") * ax.clone() + d(b, "y") * ay.clone()) * dd.clone();
        let lhs = d(b, "t") + Expr::int(2) / m.clone() * inner.diff("u") - d(b, "x") * k1.clone() - d(b, "y") * k2.clone();
        (lhs.simplify(), (Expr::int(-1) * a_dot.clone() * tk2.clone()).simplify())
    };
    let lap = |f: &Expr| (f.diff("x").diff("x") + f.diff("y").diff("y")).simplify();
    let grad2 = ((ax.clone().powi(2) + ay.clone().powi(2)) * dd.clone()).diff("u");
    let reaction = d(m, "t") * u.clone() + d(n, "t") - (lap(m) * u.clone() + lap(n)) * dd.clone()
        + grad2 / m.clone()
        - ax.clone() * k1.clone()
        - ay.clone() * k2.clone()
        + m.clone() * r;
    let g2 = (d(b1, "x").powi(2) + d(b1, "y").powi(2)).simplify();
    let (c1l, c1r) = conv(b1);
    let (c2l, c2r) = conv2(b2);
    vec![
        ("diffusion", (g2 * dd).simplify(), (a_dot.clone() * td).simplify()),
        ("convection-x", c1l, c1r),
        ("convection-y", c2l, c2r),
        ("reaction", reaction.simplify(), (a_dot.clone() * tr).simplify()),
    ]
}

fn sample_points(src: &RdcEquation, s: &Sampling) -> Vec<Binding> {
    let names: BTreeSet<String> = ["t", "x", "y", "u"].iter().map(|s| s.to_string()).collect();
    let mut s = s.clone();
    s.ranges.insert("u".into(), src.u_domain);
    s.points(&names)
}

fn report_pairs(label: &str, pts: &[Binding], tol: f64, pairs: &[(Expr, Expr)]) -> ResidualReport {
    let samples = pts
        .iter()
        .map(|b| {
            let r = (|| -> Result<(f64, f64), EvalError> {
                let mut sum: f64 = 0.0;
                let mut scale: f64 = 0.0;
                for (l, r) in pairs {
                    let (lv, rv) = (l.eval(b)?, r.eval(b)?);
                    if !lv.is_finite() || !rv.is_finite() {
                        return Err(EvalError::Domain(format!("{label}: non-finite value")));
                    }
                    sum = sum.max((lv - rv).abs());
                    scale = scale.max(lv.abs()).max(rv.abs());
                }
                Ok((sum, scale))
            })();
            (b.clone(), r)
        })
        .collect();
    ResidualReport::collect(label, tol, samples)
}

/// Check a point transformation against the class-preserving conditions and,
/// when an inverse is available, against the transport of a manufactured field.
pub fn fpt_verify(pt: &PointTransformation, src: &RdcEquation, dst: &RdcEquation, s: &Sampling) -> Result<FptReport, TransformError> {
    let shape = pt.shape()?;
    let src_c = src.bound();
    let v_expr = (shape.m.clone() * Expr::var("u") + shape.n.clone()).simplify();
    let dst_at_v = dst.bound().map(|e| e.subs1("u", &v_expr).simplify());
    let pieces = Pieces { shape, src: src_c, dst_at_v };
    let pts = sample_points(src, s);
    let tol = s.rtol;
    let mut reports = Vec::new();

    // Spatial part: conformal (b2_x = -b1_y, b2_y = b1_x) or its mirror.
    let Shape { b1, b2, a_dot, m, .. } = &pieces.shape;
    let conformal = [(d(b2, "x"), (Expr::int(-1) * d(b1, "y")).simplify()), (d(b2, "y"), d(b1, "x"))];
    let anti = [(d(b2, "x"), d(b1, "y")), (d(b2, "y"), (Expr::int(-1) * d(b1, "x")).simplify())];
    let rc = report_pairs("cauchy-riemann", &pts, tol, &conformal);
    let ra = report_pairs("cauchy-riemann", &pts, tol, &anti);
    let orientation = if rc.pass {
        Some("conformal".to_string())
    } else if ra.pass {
        Some("anticonformal".to_string())
    } else {
        None
    };
    reports.push(if rc.pass || !ra.pass { rc } else { ra });

    for (label, l, r) in conditions(&pieces) {
        reports.push(report_pairs(label, &pts, tol, &[(l, r)]));
    }

    // Nondegeneracy: a'(t) M (b1_x^2 + b1_y^2) bounded away from zero.
    let det = (a_dot.clone() * m.clone() * (d(b1, "x").powi(2) + d(b1, "y").powi(2))).simplify();
    let nd_samples = pts
        .iter()
        .map(|b| {
            let r = det.eval(b).map(|v| if v.abs() > NONDEGENERATE_TOL { (0.0, 1.0) } else { (1.0, 1.0) });
            (b.clone(), r)
        })
        .collect();
    reports.push(ResidualReport::collect("nondegenerate", 0.5, nd_samples));

    let transport = match &pt.inverse {
        Some(inv) => Some(transport_check(pt, &pieces.shape, inv, src, dst, s)?),
        None => None,
    };
    let pass = reports.iter().all(|r| r.pass) && transport.as_ref().is_none_or(|r| r.pass);
    Ok(FptReport { name: pt.name.clone(), orientation, conditions: reports, transport, pass })
}

/// Substitute a field `w(t,x,y)` and its derivatives into the right-hand side.
fn rhs_on_field(eq: &RdcEquation, w: &Expr) -> Expr {
    let wx = w.diff("x").simplify();
    let wy = w.diff("y").simplify();
    let map: HashMap<String, Expr> = [
        ("u", w.clone()),
        ("u_x", wx.clone()),
        ("u_y", wy.clone()),
        ("u_xx", wx.diff("x")),
        ("u_yy", wy.diff("y")),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    eq.rhs().substitute(&map)
}

/// The PDE residuals of a manufactured field and of its image must satisfy
/// `M * res_src = a'(t) * res_dst` at corresponding points.
fn transport_check(
    pt: &PointTransformation,
    shape: &Shape,
    inv: &[Expr; 4],
    src: &RdcEquation,
    dst: &RdcEquation,
    s: &Sampling,
) -> Result<ResidualReport, TransformError> {
    let (lo, hi) = src.u_domain;
    let (c, w) = ((lo + hi) / 2.0, 0.4 * (hi - lo) / 2.0);
    let field = parse(&format!("{c} + {w}*sin(x + 0.7*y - 0.4*t)"))?;
    let res_src = (field.diff("t") - rhs_on_field(src, &field)).simplify();
    let old: HashMap<String, Expr> = ["t", "x", "y"].iter().map(|n| n.to_string()).zip(inv[..3].iter().cloned()).collect();
    let image = pt.v.subs1("u", &field).substitute(&old).simplify();
    let res_dst = (image.diff("t") - rhs_on_field(dst, &image)).simplify();
    let names: BTreeSet<String> = ["t", "x", "y"].iter().map(|s| s.to_string()).collect();
    let pts = s.points(&names);
    let samples = pts
        .into_iter()
        .map(|b| {
            let r = (|| -> Result<(f64, f64), EvalError> {
                let uval = field.eval(&b)?;
                let p = [b["t"], b["x"], b["y"], uval];
                let q = pt.forward(&p).ok_or_else(|| EvalError::Domain("forward map undefined".into()))?;
                let nb: Binding = [("t", q[0]), ("x", q[1]), ("y", q[2])].iter().map(|(k, v)| (k.to_string(), *v)).collect();
                let lhs = shape.m.eval(&b)? * res_src.eval(&b)?;
                let rhs = shape.a_dot.eval(&b)? * res_dst.eval(&nb)?;
                Ok(((lhs - rhs).abs(), lhs.abs().max(rhs.abs())))
            })();
            (b, r)
        })
        .collect();
    Ok(ResidualReport::collect("transport", s.rtol.max(1e-8), samples))
}

/// Coefficients of the image equation read off the conditions at the
/// reference point `t = x = y = 0`. Only meaningful when the map is a genuine
/// form-preserving transformation; `fpt_verify` decides that.
pub fn coefficient_image(pt: &PointTransformation, src: &RdcEquation) -> Result<RdcEquation, TransformError> {
    let shape = pt.shape()?;
    let [dd, k1, k2, r] = src.bound();
    let Shape { a_dot, b1, b2, m, n } = &shape;
    let u = Expr::var("u");
    let aff = |dir: &str| (d(m, dir) * u.clone() + d(n, dir)).simplify();
    let (ax, ay) = (aff("x"), aff("y"));
    let conv = |b: &Expr| {
        let inner = (d(b, "x") * ax.clone() + d(b, "y") * ay.clone()) * dd.clone();
        Expr::int(-1)
            * (d(b, "t") + Expr::int(2) / m.clone() * inner.diff("u") - d(b, "x") * k1.clone() - d(b, "y") * k2.clone())
            / a_dot.clone()
    };
    let lap = |f: &Expr| f.diff("x").diff("x") + f.diff("y").diff("y");
    let nd = (d(b1, "x").powi(2) + d(b1, "y").powi(2)) * dd.clone() / a_dot.clone();
    let nr = (d(m, "t") * u.clone() + d(n, "t") - (lap(m) * u.clone() + lap(n)) * dd.clone()
        + ((ax.clone().powi(2) + ay.clone().powi(2)) * dd.clone()).diff("u") / m.clone()
        - ax.clone() * k1.clone()
        - ay.clone() * k2.clone()
        + m.clone() * r)
        / a_dot.clone();
    let origin: HashMap<String, Expr> = ["t", "x", "y"].iter().map(|n| (n.to_string(), Expr::zero())).collect();
    let m0 = m.substitute(&origin).simplify();
    let n0 = n.substitute(&origin).simplify();
    let back = ((u.clone() - n0.clone()) / m0.clone()).simplify();
    let fin = |e: Expr| e.substitute(&origin).simplify().subs1("u", &back).simplify();
    let mut out = RdcEquation::new(fin(nd), fin(conv(b1)), fin(conv(b2)), fin(nr));
    let mv = m0.eval(&Binding::new()).map_err(|e| TransformError::DomainViolation(e.to_string()))?;
    let nv = n0.eval(&Binding::new()).map_err(|e| TransformError::DomainViolation(e.to_string()))?;
    let (lo, hi) = src.u_domain;
    let (a, b) = (mv * lo + nv, mv * hi + nv);
    out.u_domain = (a.min(b), a.max(b));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawMap {
    #[serde(default)]
    correction: Option<String>,
    tau: String,
    x: String,
    y: String,
    v: String,
    inverse: [String; 4],
}

impl RawMap {
    fn build(&self, name: &str) -> Result<PointTransformation, TransformError> {
        let inv = [parse(&self.inverse[0])?, parse(&self.inverse[1])?, parse(&self.inverse[2])?, parse(&self.inverse[3])?];
        Ok(PointTransformation::new(name, parse(&self.tau)?, parse(&self.x)?, parse(&self.y)?, parse(&self.v)?).with_inverse(inv))
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawCoeffs {
    #[serde(rename = "D")]
    d: String,
    #[serde(rename = "K1", default = "zero")]
    k1: String,
    #[serde(rename = "K2", default = "zero")]
    k2: String,
    #[serde(rename = "R", default = "zero")]
    r: String,
}

fn zero() -> String {
    "0".into()
}

#[derive(Debug, Clone, Deserialize)]
struct RawEntry {
    id: u32,
    params: BTreeMap<String, ParamKind>,
    #[serde(default)]
    restrictions: Option<String>,
    source: RawCoeffs,
    target: RawCoeffs,
    printed: RawMap,
    variants: Vec<RawMap>,
}

#[derive(Debug, Deserialize)]
struct RawCatalog {
    entries: Vec<RawEntry>,
}

/// Whether the printed map verified, or which sign correction was needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum EntryStatus {
    Printed,
    SignCorrected { correction: String, printed_failure: String },
    Unverified { failure: String },
}

/// One form-preserving transformation with its source and target templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FptEntry {
    pub id: u32,
    pub source: Template,
    pub target: Template,
    /// The map in use (printed, or the sign-corrected variant).
    pub map: PointTransformation,
    pub printed: PointTransformation,
    pub status: EntryStatus,
}

const CATALOG_JSON: &str = include_str!("../../data/fpt_catalog.json");

fn template(c: &RawCoeffs, params: &BTreeMap<String, ParamKind>, restr: &Option<String>) -> Result<Template, TransformError> {
    let restrictions = Restriction::parse(restr.as_deref().unwrap_or("")).map_err(|e| TransformError::Catalog(e.to_string()))?;
    Ok(Template {
        d: c.d.clone(),
        k1: c.k1.clone(),
        k2: c.k2.clone(),
        r: c.r.clone(),
        params: params.clone(),
        restrictions,
    })
}

/// Check a map on every representative parameter assignment; the first failure is returned.
fn check_map(pt: &PointTransformation, src: &Template, dst: &Template, s: &Sampling) -> Result<(), String> {
    for a in src.representative_assignments() {
        let bound = pt.bind_params(&a.values);
        let (se, de) = match (src.instantiate(&a), dst.instantiate(&a)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(e), _) | (_, Err(e)) => return Err(e.to_string()),
        };
        let pts: Vec<[f64; 4]> = [[0.3, -0.2, 0.5, 1.1], [-0.7, 0.4, -0.1, 0.8]].to_vec();
        match bound.inverse_error(&pts) {
            Some(e) if e < 1e-10 => {}
            other => return Err(format!("inverse does not invert at {:?}: {other:?}", a.values)),
        }
        let rep = fpt_verify(&bound, &se, &de, s).map_err(|e| e.to_string())?;
        if !rep.pass {
            let bad: Vec<String> = rep.failures().iter().map(|r| format!("{} ({:.3e})", r.label, r.max_residual)).collect();
            return Err(format!("{:?}: {}", a.values, bad.join(", ")));
        }
    }
    Ok(())
}

/// Verify every entry at its representative parameters; when the printed map
/// fails, use the first listed sign variant that passes.
pub fn load_catalog(s: &Sampling) -> Result<Vec<FptEntry>, TransformError> {
    let raw: RawCatalog = serde_json::from_str(CATALOG_JSON).map_err(|e| TransformError::Catalog(e.to_string()))?;
    let mut out = Vec::new();
    for e in raw.entries {
        let source = template(&e.source, &e.params, &e.restrictions)?;
        let target = template(&e.target, &e.params, &e.restrictions)?;
        let name = format!("FPT{}", e.id);
        let printed = e.printed.build(&name)?;
        let (map, status) = match check_map(&printed, &source, &target, s) {
            Ok(()) => (printed.clone(), EntryStatus::Printed),
            Err(printed_failure) => {
                let mut chosen = None;
                for v in &e.variants {
                    let pt = v.build(&name)?;
                    if check_map(&pt, &source, &target, s).is_ok() {
                        chosen = Some((
                            pt,
                            EntryStatus::SignCorrected {
                                correction: v.correction.clone().unwrap_or_default(),
                                printed_failure: printed_failure.clone(),
                            },
                        ));
                        break;
                    }
                }
                chosen.unwrap_or((printed.clone(), EntryStatus::Unverified { failure: printed_failure }))
            }
        };
        out.push(FptEntry { id: e.id, source, target, map, printed, status });
    }
    Ok(out)
}

/// The verified catalog at the default sampling, computed once.
pub fn fpt_catalog() -> &'static [FptEntry] {
    static CATALOG: OnceLock<Vec<FptEntry>> = OnceLock::new();
    CATALOG.get_or_init(|| load_catalog(&Sampling::standard().with_samples(30)).expect("bundled catalog loads"))
}

pub fn fpt_entry(id: u32) -> Option<&'static FptEntry> {
    fpt_catalog().iter().find(|e| e.id == id)
}

/// Result of applying a catalog entry to an equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FptApplication {
    pub entry: u32,
    pub params: Assignment,
    pub map: PointTransformation,
    pub target: RdcEquation,
    pub report: FptReport,
}

/// Apply entry `entry` to `eq`, which must be a literal instance of the
/// entry's source template.
pub fn fpt_apply(eq: &RdcEquation, entry: &FptEntry, s: &Sampling) -> Result<FptApplication, TransformError> {
    let params = entry
        .source
        .match_literal(eq)
        .ok_or_else(|| TransformError::TemplateMismatch(format!("equation is not an instance of FPT{} source", entry.id)))?;
    apply_with(eq, entry, params, s)
}

/// Apply with an explicit parameter assignment (no template matching).
pub fn apply_with(eq: &RdcEquation, entry: &FptEntry, params: Assignment, s: &Sampling) -> Result<FptApplication, TransformError> {
    let map = entry.map.bind_params(&params.values);
    let mut target = entry.target.instantiate(&params).map_err(|e| TransformError::Catalog(e.to_string()))?;
    let derived = coefficient_image(&map, eq)?;
    target.u_domain = derived.u_domain;
    let report = fpt_verify(&map, eq, &target, s)?;
    if !report.pass {
        let bad: Vec<String> = report.failures().iter().map(|r| r.label.clone()).collect();
        return Err(TransformError::TargetMismatch(format!("FPT{}: {} fail", entry.id, bad.join(", "))));
    }
    Ok(FptApplication { entry: entry.id, params, map, target, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::numeric_equiv;
    use crate::transform::et::EtParams;

    fn eq(s: &str) -> RdcEquation {
        RdcEquation::from_spec(s).unwrap()
    }

    #[test]
    fn galilei_is_form_preserving_only_with_matching_shift() {
        let src = eq("D=1;K1=u;K2=u^2;R=u");
        let p = EtParams { g1: 0.7, g2: -0.4, ..EtParams::default() };
        let good = p.genuine();
        let dst = crate::transform::et_apply(&src, &good);
        let rep = fpt_verify(&p.point_transformation(), &src, &dst, &Sampling::standard()).unwrap();
        assert!(rep.pass, "{:?}", rep.failures());
        // Same point map, coefficient map with q != g.
        let off = EtParams { q1: 0.2, ..good };
        let dst = crate::transform::et_apply(&src, &off);
        let rep = fpt_verify(&p.point_transformation(), &src, &dst, &Sampling::standard()).unwrap();
        assert!(!rep.pass);
        assert!(!rep.transport.unwrap().pass);
    }

    #[test]
    fn catalog_loads_and_flags_sign_corrections() {
        let cat = fpt_catalog();
        assert_eq!(cat.len(), 9);
        for e in cat {
            assert!(!matches!(e.status, EntryStatus::Unverified { .. }), "FPT{}: {:?}", e.id, e.status);
        }
        assert!(matches!(fpt_entry(2).unwrap().status, EntryStatus::SignCorrected { .. }));
        assert!(matches!(fpt_entry(1).unwrap().status, EntryStatus::Printed));
    }

    #[test]
    fn image_coefficients_match_target() {
        let src = eq("D=u^2;R=-u^3+u");
        let app = fpt_apply(&src, fpt_entry(4).unwrap(), &Sampling::standard()).unwrap();
        assert_eq!(app.params.values["k"], 2.0);
        let derived = coefficient_image(&app.map, &src).unwrap();
        let s = Sampling::standard();
        for (a, b) in derived.bound().iter().zip(app.target.bound().iter()) {
            assert!(numeric_equiv(a, b, &s).equivalent, "{a} vs {b}");
        }
        let miss = fpt_apply(&eq("D=u^2;R=u^3+2*u"), fpt_entry(4).unwrap(), &s);
        assert!(matches!(miss, Err(TransformError::TemplateMismatch(_))));
    }
}
