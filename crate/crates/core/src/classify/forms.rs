//! Functional families of a single coefficient, and the probes used by the
//! normalisation: D families, the complex convection `K1 + i K2`, and small
//! least-squares fits.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::expr::{numeric_equiv, parse, Binding, Expr, Sampling};

const REL: f64 = 1e-8;

pub(crate) fn grid((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

pub(crate) fn at(e: &Expr, u: f64) -> Option<f64> {
    let b: Binding = [("u".to_string(), u)].into_iter().collect();
    e.eval(&b).ok().filter(|v| v.is_finite())
}

fn values(e: &Expr, us: &[f64]) -> Option<Vec<f64>> {
    us.iter().map(|&u| at(e, u)).collect()
}

fn spread_ok(vals: &[f64]) -> Option<f64> {
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let worst = vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    (worst <= REL * (1.0 + mean.abs())).then_some(mean)
}

/// True when `f` vanishes on the points relative to `scale`.
pub(crate) fn vanishes(f: &Expr, us: &[f64], scale: f64) -> bool {
    values(f, us).map(|v| v.iter().all(|x| x.abs() <= 1e-10 * (1.0 + scale))).unwrap_or(false)
}

pub(crate) fn max_abs(f: &Expr, us: &[f64]) -> f64 {
    values(f, us).map(|v| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))).unwrap_or(f64::INFINITY)
}

/// `vals[i] = slope * us[i] + icpt` exactly (to the probe tolerance).
pub(crate) fn affine(us: &[f64], vals: &[f64]) -> Option<(f64, f64)> {
    let n = us.len();
    let slope = (vals[n - 1] - vals[0]) / (us[n - 1] - us[0]);
    let icpt = vals[0] - slope * us[0];
    let scale = 1.0 + vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    us.iter().zip(vals).all(|(u, v)| (slope * u + icpt - v).abs() <= REL * scale).then_some((slope, icpt))
}

/// Least-squares coefficients of `f` in the given basis, if the fit is exact.
pub(crate) fn fit(f: &Expr, basis: &[&dyn Fn(f64) -> f64], us: &[f64]) -> Option<Vec<f64>> {
    let y = values(f, us)?;
    let a = DMatrix::from_fn(us.len(), basis.len(), |i, j| basis[j](us[i]));
    let c = a.clone().svd(true, true).solve(&DVector::from_vec(y.clone()), 1e-14).ok()?;
    let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let r = &a * &c - DVector::from_vec(y);
    (r.amax() <= 1e-9 * scale).then(|| c.iter().copied().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormKind {
    Zero,
    Constant,
    Linear,
    Exponential,
    Power,
    Logarithmic,
    ExpTrig,
    PowerTrig,
}

/// Family of a coefficient with the extracted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormTag {
    pub kind: FormKind,
    pub params: BTreeMap<String, f64>,
    /// The reconstructed coefficient.
    pub template: Expr,
}

fn tag(kind: FormKind, params: &[(&str, f64)], template: &str) -> FormTag {
    let snap = |v: f64| crate::expr::num::snap_rational(v, 12, 1e-9).map(|q| *q.numer() as f64 / *q.denom() as f64).unwrap_or(v);
    let params: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), snap(*v))).collect();
    let template = parse(template).expect("form template").bind_params(&params).simplify();
    FormTag { kind, params, template }
}

/// Identify the family of `f(u)` on the u-interval by logarithmic-derivative
/// probes and confirm against the reconstruction.
pub fn detect_form(f: &Expr, dom: (f64, f64)) -> Result<FormTag, ClassifyError> {
    let us = grid(dom, 9);
    let unrec = || ClassifyError::Unrecognized(f.render());
    let (d1, d2) = (f.diff("u").simplify(), f.diff("u").diff("u").simplify());
    let scale = max_abs(f, &us);
    if !scale.is_finite() {
        return Err(unrec());
    }
    let mut cands = Vec::new();
    if vanishes(f, &us, 0.0) {
        cands.push(tag(FormKind::Zero, &[], "0"));
    }
    let fv = values(f, &us).ok_or_else(unrec)?;
    let v1 = values(&d1, &us).ok_or_else(unrec)?;
    let v2 = values(&d2, &us).ok_or_else(unrec)?;
    if let Some(c) = spread_ok(&fv) {
        cands.push(tag(FormKind::Constant, &[("c", c)], "c"));
    }
    if let Some(a) = spread_ok(&v1) {
        cands.push(tag(FormKind::Linear, &[("a", a), ("b", fv[0] - a * us[0])], "a*u + b"));
    }
    if fv.iter().all(|v| *v != 0.0) {
        let ratio: Vec<f64> = fv.iter().zip(&v1).map(|(f, d)| d / f).collect();
        if let Some(s) = spread_ok(&ratio) {
            cands.push(tag(FormKind::Exponential, &[("c", fv[0] / (s * us[0]).exp()), ("s", s)], "c*exp(s*u)"));
        }
        let uratio: Vec<f64> = ratio.iter().zip(&us).map(|(r, u)| r * u).collect();
        if let Some(k) = spread_ok(&uratio) {
            cands.push(tag(FormKind::Power, &[("c", fv[0] / us[0].powf(k)), ("k", k)], "c*u^k"));
        }
    }
    let ud: Vec<f64> = v1.iter().zip(&us).map(|(d, u)| d * u).collect();
    if let Some(a) = spread_ok(&ud) {
        cands.push(tag(FormKind::Logarithmic, &[("a", a), ("b", fv[0] - a * us[0].ln())], "a*ln(u) + b"));
    }
    // f'' = a f' + b f, and its Euler analogue u^2 f'' = a u f' + b f.
    for (kind, euler) in [(FormKind::ExpTrig, false), (FormKind::PowerTrig, true)] {
        let lhs: Vec<f64> = v2.iter().zip(&us).map(|(v, u)| if euler { v * u * u } else { *v }).collect();
        let a = DMatrix::from_fn(us.len(), 2, |i, j| match j {
            0 => v1[i] * if euler { us[i] } else { 1.0 },
            _ => fv[i],
        });
        let Ok(sol) = a.clone().svd(true, true).solve(&DVector::from_vec(lhs.clone()), 1e-14) else { continue };
        let res = (&a * &sol - DVector::from_vec(lhs.clone())).amax();
        if res > 1e-8 * (1.0 + lhs.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            continue;
        }
        // Characteristic roots m ± i p; the Euler form uses r(r-1) = a r + b.
        let (m, disc) = if euler {
            let m = (sol[0] + 1.0) / 2.0;
            (m, -sol[1] - m * m)
        } else {
            let m = sol[0] / 2.0;
            (m, -sol[1] - m * m)
        };
        if disc <= 1e-12 {
            continue;
        }
        let p = disc.sqrt();
        let (amp, phase): (&dyn Fn(f64) -> f64, &dyn Fn(f64) -> f64) = if euler {
            (&|u: f64| u.powf(m), &|u: f64| p * u.ln())
        } else {
            (&|u: f64| (m * u).exp(), &|u: f64| p * u)
        };
        let cosb = |u: f64| amp(u) * phase(u).cos();
        let sinb = |u: f64| amp(u) * phase(u).sin();
        let Some(c) = fit(f, &[&cosb, &sinb], &us) else { continue };
        let text = if euler {
            "u^m*(a*cos(p*ln(u)) + b*sin(p*ln(u)))"
        } else {
            "exp(m*u)*(a*cos(p*u) + b*sin(p*u))"
        };
        cands.push(tag(kind, &[("m", m), ("p", p), ("a", c[0]), ("b", c[1])], text));
    }
    let s = Sampling::standard().range("u", dom.0, dom.1).with_samples(30).with_tol(1e-9, 1e-7);
    cands
        .into_iter()
        .find(|t| numeric_equiv(&t.template, f, &s).equivalent)
        .ok_or_else(unrec)
}

/// Family of the diffusivity, as needed by the normalisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum DFamily {
    /// `D = c`
    Const { c: f64 },
    /// `D = c e^{s u}`
    Exp { c: f64, s: f64 },
    /// `D = c |u - root|^k`
    Power { c: f64, k: f64, root: f64 },
    Other,
}

pub(crate) fn d_family(d: &Expr, dom: (f64, f64)) -> DFamily {
    let us = grid(dom, 7);
    let dd = d.diff("u").simplify();
    let (Some(dv), Some(d1)) = (values(d, &us), values(&dd, &us)) else { return DFamily::Other };
    let scale = dv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if d1.iter().all(|v| v.abs() <= 1e-10 * (1.0 + scale)) {
        return DFamily::Const { c: dv[0] };
    }
    if d1.iter().any(|v| *v == 0.0) {
        return DFamily::Other;
    }
    let ratio: Vec<f64> = dv.iter().zip(&d1).map(|(f, g)| g / f).collect();
    if let Some(s) = spread_ok(&ratio) {
        return DFamily::Exp { c: dv[0] / (s * us[0]).exp(), s };
    }
    let w: Vec<f64> = dv.iter().zip(&d1).map(|(f, g)| f / g).collect();
    if let Some((slope, icpt)) = affine(&us, &w) {
        if slope.abs() > 1e-12 {
            let k = 1.0 / slope;
            let root = -icpt / slope;
            return DFamily::Power { c: dv[0] / (us[0] - root).abs().powf(k), k, root };
        }
    }
    DFamily::Other
}

/// Shape of the complex convection `κ(u) = K1 + i K2` up to a constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum KShape {
    Zero,
    /// `A u`
    Linear,
    /// `A e^{μ u}`
    Exp(Complex<f64>),
    /// `A (u - root)^μ`
    Power(Complex<f64>),
    /// `A ln(u - root)`
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct KDecomp {
    pub shape: KShape,
    pub amp: Complex<f64>,
    pub c0: Complex<f64>,
    pub root: f64,
}

fn c_close(zs: &[Complex<f64>]) -> Option<Complex<f64>> {
    let mean = zs.iter().sum::<Complex<f64>>() / zs.len() as f64;
    let worst = zs.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max);
    (worst <= REL * (1.0 + mean.norm())).then_some(mean)
}

/// Decompose `κ = c0 + A F(u)` with F one of the shapes. With `allow_root`
/// the power and log shapes may be centred at a root other than 0.
pub(crate) fn k_decompose(k1: &Expr, k2: &Expr, dom: (f64, f64), allow_root: bool) -> Option<KDecomp> {
    let us = grid(dom, 7);
    let series = |e: &Expr| -> Option<[Vec<f64>; 3]> {
        let d1 = e.diff("u").simplify();
        let d2 = d1.diff("u").simplify();
        Some([values(e, &us)?, values(&d1, &us)?, values(&d2, &us)?])
    };
    let [a0, a1, a2] = series(k1)?;
    let [b0, b1, b2] = series(k2)?;
    let z = |a: &[f64], b: &[f64]| -> Vec<Complex<f64>> { a.iter().zip(b).map(|(x, y)| Complex::new(*x, *y)).collect() };
    let (k, dk, ddk) = (z(&a0, &b0), z(&a1, &b1), z(&a2, &b2));
    let scale = k.iter().chain(&dk).fold(0.0f64, |m, v| m.max(v.norm()));
    let small = |v: &[Complex<f64>]| v.iter().all(|x| x.norm() <= 1e-10 * (1.0 + scale));
    if small(&dk) {
        return Some(KDecomp { shape: KShape::Zero, amp: Complex::new(0.0, 0.0), c0: k[0], root: 0.0 });
    }
    if small(&ddk) {
        let a = dk[0];
        return Some(KDecomp { shape: KShape::Linear, amp: a, c0: k[0] - a * us[0], root: 0.0 });
    }
    if dk.iter().any(|v| v.norm() == 0.0) {
        return None;
    }
    let ratio: Vec<Complex<f64>> = ddk.iter().zip(&dk).map(|(b, a)| b / a).collect();
    if let Some(mu) = c_close(&ratio) {
        let a = dk[0] / (mu * (mu * us[0]).exp());
        return Some(KDecomp { shape: KShape::Exp(mu), amp: a, c0: k[0] - dk[0] / mu, root: 0.0 });
    }
    let power_at = |root: f64| -> Option<KDecomp> {
        let ur: Vec<f64> = us.iter().map(|u| u - root).collect();
        if ur.iter().any(|v| *v <= 0.0) {
            return None;
        }
        let nu: Vec<Complex<f64>> = ratio.iter().zip(&ur).map(|(r, u)| r * *u).collect();
        let mu = c_close(&nu)? + 1.0;
        let (v, w) = (ur[0], dk[0]);
        if mu.norm() < 1e-9 {
            let a = w * v;
            Some(KDecomp { shape: KShape::Log, amp: a, c0: k[0] - a * v.ln(), root })
        } else {
            let a = w * (Complex::new(v, 0.0).ln() * (1.0 - mu)).exp() / mu;
            Some(KDecomp { shape: KShape::Power(mu), amp: a, c0: k[0] - w * v / mu, root })
        }
    };
    if let Some(d) = power_at(0.0) {
        return Some(d);
    }
    if !allow_root {
        return None;
    }
    // κ'/κ'' = (u - root)/(μ - 1) is affine in u with a real root.
    let w: Vec<Complex<f64>> = dk.iter().zip(&ddk).map(|(a, b)| a / b).collect();
    let n = us.len();
    let slope = (w[n - 1] - w[0]) / (us[n - 1] - us[0]);
    if slope.norm() < 1e-12 {
        return None;
    }
    let root = us[0] - w[0] / slope;
    if root.im.abs() > 1e-8 * (1.0 + root.re.abs()) {
        return None;
    }
    power_at(root.re)
}

/// Root of R when it is a shifted power `c (u - r)^n`, a shifted `u ln u`
/// form, or a nonconstant linear function. Used to fix the free u-shift when
/// D is constant.
pub(crate) fn r_root(r: &Expr, dom: (f64, f64)) -> Option<f64> {
    let us = grid(dom, 7);
    let d1 = r.diff("u").simplify();
    let d2 = d1.diff("u").simplify();
    let rv = values(r, &us)?;
    let v1 = values(&d1, &us)?;
    let v2 = values(&d2, &us)?;
    let scale = rv.iter().chain(&v1).fold(0.0f64, |m, v| m.max(v.abs()));
    if v1.iter().all(|v| v.abs() <= 1e-10 * (1.0 + scale)) {
        return None;
    }
    if v2.iter().all(|v| v.abs() <= 1e-10 * (1.0 + scale)) {
        return Some(us[0] - rv[0] / v1[0]);
    }
    if v1.iter().all(|v| *v != 0.0) {
        let w: Vec<f64> = rv.iter().zip(&v1).map(|(f, g)| f / g).collect();
        if let Some((slope, icpt)) = affine(&us, &w) {
            if slope.abs() > 1e-12 {
                return Some(-icpt / slope);
            }
        }
    }
    if v2.iter().all(|v| *v != 0.0) {
        let w: Vec<f64> = v2.iter().map(|g| 1.0 / g).collect();
        if let Some((slope, icpt)) = affine(&us, &w) {
            if slope.abs() > 1e-12 {
                return Some(-icpt / slope);
            }
        }
    }
    None
}

/// Constant logarithmic rate of `f`: `f'/f` (exponential) or `u f'/f` (power).
pub(crate) fn rate(f: &Expr, dom: (f64, f64), power: bool) -> Option<f64> {
    let us = grid(dom, 7);
    let fv = values(f, &us)?;
    let dv = values(&f.diff("u").simplify(), &us)?;
    if fv.iter().any(|v| *v == 0.0) {
        return None;
    }
    let r: Vec<f64> = fv.iter().zip(&dv).zip(&us).map(|((f, d), u)| d / f * if power { *u } else { 1.0 }).collect();
    spread_ok(&r)
}
