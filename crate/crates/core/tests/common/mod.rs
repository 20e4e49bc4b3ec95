//! Helpers shared by the integration targets: random equivalence
//! transformations, round-trip instances, random expression trees.

#![allow(dead_code)]

use std::collections::BTreeMap;

use lie_rdc::classify::{case_catalog, classify, CaseTemplate};
use lie_rdc::expr::{numeric_equiv, Binding, Expr, Sampling};
use lie_rdc::model::RdcEquation;
use lie_rdc::template::{Assignment, ParamKind};
use lie_rdc::transform::{et_apply, EtParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ROUNDTRIP_SEED: u64 = 20190917;

/// θ2 uniform on [0, 2π), everything else on [-1, 1], with q = g.
pub fn random_et(rng: &mut ChaCha8Rng) -> EtParams {
    let mut u = || rng.gen_range(-1.0..1.0);
    let p = EtParams {
        theta0: u(),
        theta1: u(),
        theta2: 0.0,
        theta: u(),
        m0: u(),
        m1: u(),
        m2: u(),
        g1: u(),
        g2: u(),
        m: u(),
        q1: 0.0,
        q2: 0.0,
    };
    EtParams { theta2: rng.gen_range(0.0..std::f64::consts::TAU), ..p }.genuine()
}

/// Representative bindings of a row that are in normal form.
pub fn roundtrip_instances(row: &CaseTemplate) -> Vec<(Assignment, RdcEquation)> {
    let rt = row.roundtrip_restriction();
    row.template
        .representative_assignments()
        .into_iter()
        .filter(|a| rt.as_ref().map_or(true, |r| r.holds(&a.values).unwrap_or(false)))
        .map(|a| {
            let e = row.template.instantiate(&a).unwrap();
            (a, e)
        })
        .collect()
}

/// Parameters recovered to 1e-8 (relative); gauge parameters up to sign.
pub fn params_agree(row: &CaseTemplate, want: &BTreeMap<String, f64>, got: &BTreeMap<String, f64>) -> bool {
    want.iter().all(|(k, v)| {
        if matches!(row.template.params.get(k), Some(ParamKind::Fixed { .. })) {
            return true;
        }
        let Some(g) = got.get(k) else { return false };
        if row.gauge.contains(k) {
            (g.abs() - v.abs()).abs() < 1e-8
        } else {
            (g - v).abs() < 1e-8 * (1.0 + v.abs())
        }
    })
}

pub struct RoundTrip {
    pub runs: usize,
    /// (case, runs) per final-table row.
    pub per_case: Vec<(u32, usize)>,
    pub failures: Vec<String>,
}

/// `n` random transformations per final-table case, each classified back.
pub fn run_roundtrip(n: usize, seed: u64, s: &Sampling) -> RoundTrip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = RoundTrip { runs: 0, per_case: Vec::new(), failures: Vec::new() };
    for row in &case_catalog().table4 {
        let inst = roundtrip_instances(row);
        for i in 0..n {
            let (a, e) = &inst[i % inst.len()];
            let et = random_et(&mut rng);
            let input = et_apply(e, &et);
            out.runs += 1;
            match classify(&input, s) {
                Ok(r) if r.case == Some(row.case) && params_agree(row, &a.values, &r.params) && r.verified && r.chain_verified => {}
                Ok(r) => out.failures.push(format!(
                    "case {} {:?} via {:?}: got {:?} {:?} chain_verified={}",
                    row.case, a.values, et, r.case, r.params, r.chain_verified
                )),
                Err(err) => out.failures.push(format!("case {} {:?} via {:?}: {err}", row.case, a.values, et)),
            }
        }
        out.per_case.push((row.case, n));
    }
    out
}

/// A random tree over t, x, y built from the raw node types, so `simplify`
/// has real work to do.
pub fn random_tree(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..6) {
            0 | 1 => Expr::var("x"),
            2 => Expr::var("y"),
            3 => Expr::var("t"),
            4 => Expr::int(rng.gen_range(-3..=3)),
            _ => Expr::rat(rng.gen_range(-5..=5), rng.gen_range(1..=4)),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..10) {
        0 | 1 => Expr::Add(vec![random_tree(rng, d), random_tree(rng, d)]),
        2 => Expr::Add(vec![random_tree(rng, d), Expr::Mul(vec![Expr::int(-1), random_tree(rng, d)])]),
        3 | 4 => Expr::Mul(vec![random_tree(rng, d), random_tree(rng, d)]),
        5 => Expr::Div(Box::new(random_tree(rng, d)), Box::new(random_tree(rng, d))),
        6 => {
            let e = if rng.gen_bool(0.8) { Expr::int(rng.gen_range(-2..=3)) } else { Expr::rat(1, 2) };
            Expr::Pow(Box::new(random_tree(rng, d)), Box::new(e))
        }
        7 => Expr::exp(random_tree(rng, d)),
        8 => Expr::sin(random_tree(rng, d)),
        _ => match rng.gen_range(0..2) {
            0 => Expr::cos(random_tree(rng, d)),
            _ => Expr::ln(random_tree(rng, d)),
        },
    }
}

fn point(rng: &mut ChaCha8Rng) -> Binding {
    ["t", "x", "y"].iter().map(|n| (n.to_string(), rng.gen_range(-1.0..1.0))).collect()
}

fn central(f: &Expr, b: &Binding, v: &str, h: f64) -> Option<f64> {
    let at = |d: f64| {
        let mut q = b.clone();
        *q.get_mut(v)? += d;
        f.eval(&q).ok()
    };
    let (p, m) = (at(h)?, at(-h)?);
    Some((p - m) / (2.0 * h))
}

/// Symbolic derivative against central differences at a random point.
/// `None` when the point is ill-conditioned: the function is undefined or
/// huge nearby, or halving the step moves the estimate by more than 1e-8.
pub fn derivative_check(f: &Expr, v: &str, rng: &mut ChaCha8Rng) -> Option<(f64, f64)> {
    let b = point(rng);
    let fv = f.eval(&b).ok()?;
    if !fv.is_finite() || fv.abs() > 1e6 {
        return None;
    }
    let coarse = central(f, &b, v, 1e-4)?;
    let fine = central(f, &b, v, 5e-5)?;
    if !(coarse.is_finite() && fine.is_finite()) || (coarse - fine).abs() > 1e-8 * fine.abs().max(1.0) {
        return None;
    }
    let sym = f.diff(v).eval(&b).ok()?;
    Some((sym, fine))
}

pub const DERIVATIVE_TOL: f64 = 1e-5;

/// Run derivative checks until `n` well-conditioned ones are done.
/// Returns (checks, rejected draws, failures).
pub fn derivative_checks(n: usize, seed: u64) -> (usize, usize, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut done, mut rejected, mut failures) = (0, 0, Vec::new());
    while done < n {
        let f = random_tree(&mut rng, 4);
        let v = ["x", "y", "t"][rng.gen_range(0..3)];
        match derivative_check(&f, v, &mut rng) {
            Some((sym, fd)) => {
                done += 1;
                if (sym - fd).abs() > DERIVATIVE_TOL * sym.abs().max(1.0) {
                    failures.push(format!("d/d{v} {}: symbolic {sym}, differences {fd}", f.render()));
                }
            }
            None => rejected += 1,
        }
    }
    (done, rejected, failures)
}

/// Largest |value| of any subtree over the sample points where it is defined.
pub fn max_node_magnitude(f: &Expr, pts: &[Binding]) -> f64 {
    let here = pts.iter().filter_map(|b| f.eval(b).ok()).fold(0.0_f64, |m, v| m.max(v.abs()));
    f.children().into_iter().map(|c| max_node_magnitude(c, pts)).fold(here, f64::max)
}

/// Below this every intermediate value keeps rounding differences between
/// equivalent evaluation orders under the comparison tolerance.
pub const WELL_CONDITIONED: f64 = 1e4;

/// Compare a tree with its simplified form; `None` for trees defined at fewer
/// than five sample points or with intermediate values above `WELL_CONDITIONED`.
pub fn simplify_check(f: &Expr, seed: u64) -> Option<Result<(), String>> {
    let mut s = Sampling::standard().with_samples(20).with_seed(seed);
    s.skip_undefined = true;
    let g = f.simplify();
    let mut names = f.free_names();
    names.extend(g.free_names());
    if max_node_magnitude(f, &s.points(&names)) > WELL_CONDITIONED {
        return None;
    }
    let r = numeric_equiv(f, &g, &s);
    if r.points_checked < 5 {
        return None;
    }
    Some(if r.equivalent { Ok(()) } else { Err(format!("{} vs {}: {:?}", f.render(), g.render(), r.witness)) })
}

/// `simplify` leaves the value unchanged wherever the original is defined.
pub fn simplify_checks(n: usize, seed: u64) -> (usize, usize, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut done, mut rejected, mut failures) = (0, 0, Vec::new());
    while done < n {
        let f = random_tree(&mut rng, 4);
        match simplify_check(&f, rng.gen()) {
            Some(r) => {
                done += 1;
                if let Err(e) = r {
                    failures.push(e);
                }
            }
            None => rejected += 1,
        }
    }
    (done, rejected, failures)
}

/// Seeded RNG for test-local draws.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
