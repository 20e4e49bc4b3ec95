//! Closed-form normalising transformations.
//!
//! Stage one fixes the u-affine part and the diffusivity scale from D. Stage
//! two removes the constant part of `K1 + i K2` by a Galilei shift, rotates its
//! amplitude onto the positive real axis and scales it to one. Stage three uses
//! the scalings that keep D and K fixed to bring R to the table's constants.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Complex;

use super::forms::{at, d_family, fit, grid, k_decompose, r_root, rate, vanishes, DFamily, KDecomp, KShape};
use super::{ChainStep, ClassifyError};
use crate::model::RdcEquation;
use crate::transform::{discrete_et, et_apply, DiscreteEt, EtParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum DTag {
    Const,
    Exp,
    Power(f64),
    Other,
}

impl DTag {
    pub fn name(self) -> &'static str {
        match self {
            DTag::Const => "const",
            DTag::Exp => "exp",
            DTag::Power(_) => "power",
            DTag::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum KTag {
    Zero,
    Linear,
    Log,
    Exp(Complex<f64>),
    Power(Complex<f64>),
    Other,
}

impl KTag {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            KTag::Zero => &["zero"],
            KTag::Linear => &["linear", "power"],
            KTag::Log => &["log"],
            KTag::Exp(_) => &["exp"],
            KTag::Power(_) => &["power"],
            KTag::Other => &[],
        }
    }
}

pub(crate) struct Pipeline {
    pub eq: RdcEquation,
    pub chain: Vec<ChainStep>,
}

impl Pipeline {
    fn et(&mut self, p: EtParams) {
        if p == EtParams::identity() || p.as_array().iter().any(|v| !v.is_finite()) {
            return;
        }
        self.eq = et_apply(&self.eq, &p);
        if let Some(ChainStep::Et { params }) = self.chain.last_mut() {
            *params = params.then(&p);
        } else {
            self.chain.push(ChainStep::Et { params: p });
        }
    }

    fn flip(&mut self) -> Result<(), ClassifyError> {
        self.eq = discrete_et(&self.eq, DiscreteEt::FlipU)?;
        self.chain.push(ChainStep::Discrete { kind: DiscreteEt::FlipU });
        Ok(())
    }

    fn coeffs(&self) -> [crate::expr::Expr; 4] {
        self.eq.bound()
    }

    fn dom(&self) -> (f64, f64) {
        self.eq.u_domain
    }

    fn k(&self, allow_root: bool) -> Option<KDecomp> {
        let [_, k1, k2, _] = self.coeffs();
        k_decompose(&k1, &k2, self.dom(), allow_root)
    }

    /// Move `root` to u = 0, flipping u first when the domain lies below it.
    fn unshift(&mut self, root: f64, again: impl Fn(&Pipeline) -> Option<f64>) -> Result<(), ClassifyError> {
        let (lo, hi) = self.dom();
        let mut root = root;
        if hi <= root {
            self.flip()?;
            root = again(self).unwrap_or(-root);
        } else if lo <= root {
            return Ok(());
        }
        self.et(EtParams::u_shift(-root));
        Ok(())
    }

    /// Rotate the convection amplitude onto the real axis and remove its constant part.
    fn align(&mut self, negative: bool) {
        let Some(kd) = self.k(false) else { return };
        let theta2 = if matches!(kd.shape, KShape::Zero) {
            0.0
        } else {
            -kd.amp.arg() + if negative { PI } else { 0.0 }
        };
        let q = Complex::from_polar(1.0, theta2) * kd.c0;
        let mut p = EtParams::rotation(theta2);
        p.g1 = q.re;
        p.g2 = q.im;
        self.et(p.genuine());
    }
}

/// `t`-scaling that keeps D: K is multiplied by `e^{-θ0/2}`, R by `e^{-θ0}`.
fn time_scale(theta0: f64) -> EtParams {
    EtParams::scaling(theta0, theta0 / 2.0, 0.0)
}

pub(crate) struct Normalized {
    pub eq: RdcEquation,
    pub chain: Vec<ChainStep>,
    pub d: DTag,
    pub k: KTag,
    pub hints: BTreeMap<String, Vec<f64>>,
}

pub(crate) fn normalize(input: &RdcEquation) -> Result<Normalized, ClassifyError> {
    let mut eq = input.clone();
    eq.d = eq.d.bind_params(&eq.params).simplify();
    eq.k1 = eq.k1.bind_params(&eq.params).simplify();
    eq.k2 = eq.k2.bind_params(&eq.params).simplify();
    eq.r = eq.r.bind_params(&eq.params).simplify();
    eq.params.clear();
    let mut p = Pipeline { eq, chain: Vec::new() };

    let d = d_stage(&mut p)?;
    if d == DTag::Const {
        const_shift(&mut p)?;
    }
    let k = k_stage(&mut p, d)?;
    let negative = gauge(&mut p, d, k);
    if k != KTag::Other {
        p.align(negative);
    }

    let mut hints: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    match d {
        DTag::Power(kk) => {
            hints.insert("k".into(), vec![kk]);
        }
        DTag::Const => {
            hints.insert("k".into(), vec![0.0]);
        }
        _ => {}
    }
    let mut ms = Vec::new();
    match k {
        KTag::Exp(mu) | KTag::Power(mu) => {
            ms.push(mu.re);
            hints.insert("p".into(), vec![mu.im]);
        }
        KTag::Linear => {
            ms.push(1.0);
            hints.insert("p".into(), vec![0.0]);
        }
        _ => {}
    }
    let r = p.eq.bound()[3].clone();
    for power in [false, true] {
        if let Some(n) = rate(&r, p.dom(), power) {
            ms.push(n);
        }
    }
    if !ms.is_empty() {
        hints.insert("m".into(), ms);
    }
    Ok(Normalized { eq: p.eq, chain: p.chain, d, k, hints })
}

fn d_stage(p: &mut Pipeline) -> Result<DTag, ClassifyError> {
    let d = p.coeffs()[0].clone();
    match d_family(&d, p.dom()) {
        DFamily::Const { c } if c > 0.0 => {
            p.et(EtParams::scaling(0.0, -0.5 * c.ln(), 0.0));
            Ok(DTag::Const)
        }
        DFamily::Exp { s, .. } => {
            if s < 0.0 {
                p.flip()?;
            }
            let DFamily::Exp { c, s } = d_family(&p.coeffs()[0], p.dom()) else { return Ok(DTag::Other) };
            p.et(EtParams::scaling(0.0, -0.5 * c.ln(), s.ln()));
            Ok(DTag::Exp)
        }
        DFamily::Power { root, .. } => {
            let again = |q: &Pipeline| match d_family(&q.coeffs()[0], q.dom()) {
                DFamily::Power { root, .. } => Some(root),
                _ => None,
            };
            p.unshift(root, again)?;
            match d_family(&p.coeffs()[0], p.dom()) {
                DFamily::Power { c, k, root } if root.abs() <= 1e-9 * (1.0 + p.dom().1.abs()) => {
                    p.et(EtParams::scaling(0.0, -0.5 * c.ln(), 0.0));
                    let k = crate::expr::num::snap_rational(k, 12, 1e-9)
                        .map(|q| *q.numer() as f64 / *q.denom() as f64)
                        .unwrap_or(k);
                    Ok(DTag::Power(k))
                }
                _ => Ok(DTag::Other),
            }
        }
        _ => Ok(DTag::Other),
    }
}

/// With constant D the u-shift is free; fix it from K, or from R when K is
/// zero or linear.
fn const_shift(p: &mut Pipeline) -> Result<(), ClassifyError> {
    let from_k = |q: &Pipeline| match q.k(true) {
        Some(KDecomp { shape: KShape::Power(_) | KShape::Log, root, .. }) => Some(root),
        _ => None,
    };
    let from_r = |q: &Pipeline| r_root(&q.coeffs()[3], q.dom());
    match p.k(true).map(|k| k.shape) {
        Some(KShape::Power(_) | KShape::Log) => {
            if let Some(root) = from_k(p) {
                p.unshift(root, from_k)?;
            }
        }
        Some(KShape::Zero | KShape::Linear) => {
            if let Some(root) = from_r(p) {
                p.unshift(root, from_r)?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn k_stage(p: &mut Pipeline, d: DTag) -> Result<KTag, ClassifyError> {
    let Some(kd) = p.k(false) else { return Ok(KTag::Other) };
    if d == DTag::Const {
        if let KShape::Exp(mu) = kd.shape {
            // The u-scaling is free: bring the exponent to Re μ = 1, or to
            // Im μ = 1 when it is purely imaginary.
            let lead = if mu.re.abs() > 1e-9 { mu.re } else { mu.im };
            if lead < 0.0 {
                p.flip()?;
            }
            p.et(EtParams::scaling(0.0, 0.0, lead.abs().ln()));
        }
    }
    p.align(false);
    let Some(kd) = p.k(false) else { return Ok(KTag::Other) };
    if kd.shape != KShape::Zero {
        p.et(time_scale(2.0 * kd.amp.norm().ln()));
    }
    let snap = |z: Complex<f64>| {
        let s = |v: f64| {
            crate::expr::num::snap_rational(v, 12, 1e-9).map(|q| *q.numer() as f64 / *q.denom() as f64).unwrap_or(v)
        };
        Complex::new(s(z.re), s(z.im))
    };
    Ok(match kd.shape {
        KShape::Zero => KTag::Zero,
        KShape::Linear => KTag::Linear,
        KShape::Log => KTag::Log,
        KShape::Exp(mu) => KTag::Exp(snap(mu)),
        KShape::Power(mu) if (mu - 1.0).norm() < 1e-9 => KTag::Linear,
        KShape::Power(mu) => KTag::Power(snap(mu)),
    })
}

fn nonzero(v: f64) -> bool {
    v.abs() > 1e-10
}

/// Fix the remaining scalings from R. Returns true when the convection
/// amplitude must end up negative (the special power case with 4(k+1)/k < 0).
fn gauge(p: &mut Pipeline, d: DTag, k: KTag) -> bool {
    let r = p.coeffs()[3].clone();
    let dom = p.dom();
    let us = grid(dom, 9);
    let u0 = us[0];
    if vanishes(&r, &us, 0.0) {
        return false;
    }
    let one = |_: f64| 1.0;
    let lin = |u: f64| u;
    match (d, k) {
        (DTag::Const, KTag::Zero) => {
            if let Some(c) = fit(&r, &[&one], &us) {
                p.et(time_scale(c[0].abs().ln()));
            } else if let Some(c) = fit(&r, &[&lin], &us) {
                p.et(time_scale(c[0].abs().ln()));
            } else if let Some(c) = fit(&r, &[&|u: f64| u * u.ln(), &lin], &us).filter(|c| nonzero(c[0])) {
                let th0 = c[0].abs().ln();
                p.et(EtParams::scaling(th0, th0 / 2.0, c[1] / c[0]));
            } else if let Some(mu) = rate(&r, dom, false) {
                if mu < 0.0 && p.flip().is_err() {
                    return false;
                }
                let r = p.coeffs()[3].clone();
                let u0 = grid(p.dom(), 9)[0];
                let mu = mu.abs();
                let Some(g) = at(&r, u0).map(|v| v / (mu * u0).exp()) else { return false };
                let th = mu.ln();
                p.et(EtParams::scaling(th + g.abs().ln(), (th + g.abs().ln()) / 2.0, th));
            } else if let Some(n) = rate(&r, dom, true) {
                if let Some(g) = at(&r, u0).map(|v| v / u0.powf(n)) {
                    p.et(time_scale(g.abs().ln()));
                }
            }
        }
        (DTag::Const, KTag::Linear) => {
            if let Some(c) = fit(&r, &[&lin, &one], &us) {
                let th0 = if nonzero(c[0]) { c[0].abs().ln() } else { 2.0 / 3.0 * c[1].abs().ln() };
                p.et(EtParams::scaling(th0, th0 / 2.0, -th0 / 2.0));
            }
        }
        (DTag::Const, KTag::Log) => {
            let l2 = |u: f64| u * u.ln().powi(2);
            let l1 = |u: f64| u * u.ln();
            if let Some(c) = fit(&r, &[&l2, &l1, &lin], &us) {
                if nonzero(c[0]) {
                    p.et(EtParams::scaling(0.0, 0.0, c[1] / (2.0 * c[0])));
                    if c[0] > 0.0 {
                        p.et(time_scale(c[0].ln()));
                    }
                } else if nonzero(c[1]) {
                    p.et(EtParams::scaling(0.0, 0.0, c[2] / c[1]));
                }
            }
        }
        (DTag::Exp, KTag::Zero) => {
            let ex = |u: f64| u.exp();
            if let Some(c) = fit(&r, &[&one], &us) {
                p.et(time_scale(c[0].abs().ln()));
            } else if let Some(c) = fit(&r, &[&ex, &one], &us).filter(|c| nonzero(c[0]) && nonzero(c[1])) {
                let th0 = c[1].abs().ln();
                let ms = c[0].abs().ln() - th0;
                p.et(EtParams { theta0: th0, theta1: (th0 + ms) / 2.0, m: ms, ..EtParams::default() });
            } else if let Some(n) = rate(&r, dom, false) {
                if let Some(g) = at(&r, u0).map(|v| v / (n * u0).exp()) {
                    p.et(time_scale(g.abs().ln()));
                }
            }
        }
        (DTag::Exp, KTag::Exp(mu)) => {
            let e = 2.0 * mu.re - 1.0;
            let ex = move |u: f64| (e * u).exp();
            if let Some(c) = fit(&r, &[&ex, &one], &us) {
                if nonzero(c[1]) && e.abs() > 1e-9 {
                    let th0 = c[1].abs().ln();
                    let ms = -th0 / e;
                    p.et(EtParams { theta0: th0, theta1: (th0 + ms) / 2.0, m: ms, ..EtParams::default() });
                }
            }
        }
        (DTag::Power(kk), KTag::Zero) => {
            let a = move |u: f64| u.powf(kk + 1.0);
            if let Some(n) = rate(&r, dom, true) {
                if let Some(g) = at(&r, u0).map(|v| v / u0.powf(n)) {
                    p.et(EtParams::scaling(g.abs().ln(), g.abs().ln() / 2.0, 0.0));
                }
            } else if let Some(c) = fit(&r, &[&a, &lin], &us).filter(|c| nonzero(c[0]) && nonzero(c[1])) {
                let th0 = c[1].abs().ln();
                let th = (c[0].abs().ln() - th0) / kk;
                p.et(EtParams::scaling(th0, (th0 + kk * th) / 2.0, th));
            }
        }
        (DTag::Power(kk), KTag::Linear | KTag::Power(_)) => {
            let mu = match k {
                KTag::Power(mu) => mu,
                _ => Complex::new(1.0, 0.0),
            };
            if (mu - kk).norm() > 1e-9 {
                return false;
            }
            let a = move |u: f64| u.powf(kk + 1.0);
            let Some(c) = fit(&r, &[&a, &lin], &us) else { return false };
            let (lam, mut gam) = (c[0], c[1]);
            let mut negative = false;
            if (kk + 1.0).abs() > 1e-9 && (lam - 0.25 / (kk + 1.0)).abs() <= 1e-8 * (1.0 + lam.abs()) {
                let tau = 4.0 * (kk + 1.0) / kk;
                p.et(time_scale(-2.0 * tau.abs().ln()));
                gam *= tau * tau;
                if tau < 0.0 {
                    p.et(EtParams::rotation(PI));
                    negative = true;
                }
            }
            if nonzero(gam) {
                let th = -gam.abs().ln() / kk;
                p.et(EtParams::scaling(-kk * th, 0.0, th));
            }
            return negative;
        }
        _ => {}
    }
    false
}
