//! Random sampling boxes and the numeric equivalence test.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{is_variable_name, Binding, EvalError, Expr};

/// Seed used whenever none is given.
pub const DEFAULT_SEED: u64 = 0x5EED_2019;

/// Jet coordinates sampled as independent values. Mixed time derivatives are
/// included because prolonged fields may contain them off the symmetry locus.
pub const JET_NAMES: [&str; 9] = ["u_t", "u_x", "u_y", "u_xx", "u_xy", "u_yy", "u_tt", "u_tx", "u_ty"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    /// Interval per sampled name.
    pub ranges: BTreeMap<String, (f64, f64)>,
    /// Names held at a fixed value (parameters, usually).
    pub fixed: BTreeMap<String, f64>,
    pub samples: usize,
    pub seed: u64,
    pub atol: f64,
    pub rtol: f64,
    /// Skip points where the first expression is undefined instead of failing.
    pub skip_undefined: bool,
}

impl Sampling {
    /// u in [0.5, 2], t, x, y, w and all jet derivatives in [-1, 1], 100 points.
    pub fn standard() -> Sampling {
        let mut ranges = BTreeMap::new();
        for n in ["t", "x", "y", "w"] {
            ranges.insert(n.to_string(), (-1.0, 1.0));
        }
        ranges.insert("u".to_string(), (0.5, 2.0));
        for n in JET_NAMES {
            ranges.insert(n.to_string(), (-1.0, 1.0));
        }
        Sampling {
            ranges,
            fixed: BTreeMap::new(),
            samples: 100,
            seed: DEFAULT_SEED,
            atol: 1e-10,
            rtol: 1e-9,
            skip_undefined: false,
        }
    }

    pub fn fix(mut self, name: &str, v: f64) -> Sampling {
        self.fixed.insert(name.to_string(), v);
        self
    }

    pub fn fix_all(mut self, params: &BTreeMap<String, f64>) -> Sampling {
        for (k, v) in params {
            self.fixed.insert(k.clone(), *v);
        }
        self
    }

    pub fn range(mut self, name: &str, lo: f64, hi: f64) -> Sampling {
        self.ranges.insert(name.to_string(), (lo, hi));
        self
    }

    pub fn with_samples(mut self, n: usize) -> Sampling {
        self.samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Sampling {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, atol: f64, rtol: f64) -> Sampling {
        self.atol = atol;
        self.rtol = rtol;
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn range_of(&self, name: &str) -> Option<(f64, f64)> {
        self.ranges.get(name).copied().or_else(|| is_variable_name(name).then_some((-1.0, 1.0)))
    }

    /// Sample points binding every name in `names` (fixed names take their fixed value).
    /// Names with neither a range nor a fixed value are left unbound.
    pub fn points(&self, names: &BTreeSet<String>) -> Vec<Binding> {
        let mut rng = self.rng();
        let mut all: BTreeSet<String> = names.clone();
        all.extend(self.ranges.keys().cloned());
        (0..self.samples)
            .map(|_| {
                let mut b = Binding::new();
                for n in &all {
                    if let Some(v) = self.fixed.get(n) {
                        b.insert(n.clone(), *v);
                    } else if let Some((lo, hi)) = self.range_of(n) {
                        b.insert(n.clone(), if hi > lo { rng.gen_range(lo..hi) } else { lo });
                    }
                }
                for (k, v) in &self.fixed {
                    b.insert(k.clone(), *v);
                }
                b
            })
            .collect()
    }

    /// Whether `a` and `b` agree within the tolerance `atol + rtol * max(|a|, |b|)`.
    pub fn close(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.atol + self.rtol * a.abs().max(b.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: BTreeMap<String, f64>,
    pub left: Result<f64, String>,
    pub right: Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivReport {
    pub equivalent: bool,
    pub max_deviation: f64,
    pub points_checked: usize,
    pub witness: Option<Witness>,
}

fn err_str(r: Result<f64, EvalError>) -> Result<f64, String> {
    r.map_err(|e| e.to_string())
}

/// Sampled equality test. A domain error on either side is a failure with witness,
/// except on points skipped through `skip_undefined`.
pub fn numeric_equiv(a: &Expr, b: &Expr, s: &Sampling) -> EquivReport {
    let mut names = a.free_names();
    names.extend(b.free_names());
    let mut max_dev: f64 = 0.0;
    let mut checked = 0;
    let mut witness = None;
    let mut worst_excess = f64::NEG_INFINITY;
    for p in s.points(&names) {
        let va = a.eval(&p);
        if va.is_err() && s.skip_undefined {
            continue;
        }
        let vb = b.eval(&p);
        checked += 1;
        let (ok, excess) = match (&va, &vb) {
            (Ok(x), Ok(y)) => {
                let dev = (x - y).abs();
                max_dev = max_dev.max(dev);
                let allowed = s.atol + s.rtol * x.abs().max(y.abs());
                (dev <= allowed, dev - allowed)
            }
            _ => (false, f64::INFINITY),
        };
        if !ok && excess > worst_excess {
            worst_excess = excess;
            witness = Some(Witness {
                point: p.iter().map(|(k, v)| (k.clone(), *v)).collect(),
                left: err_str(va),
                right: err_str(vb),
            });
            if excess.is_infinite() {
                max_dev = f64::INFINITY;
            }
        }
    }
    EquivReport { equivalent: witness.is_none(), max_deviation: max_dev, points_checked: checked, witness }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn eq(a: &str, b: &str) -> EquivReport {
        numeric_equiv(&parse(a).unwrap(), &parse(b).unwrap(), &Sampling::standard())
    }

    #[test]
    fn pythagorean_identity() {
        assert!(eq("sin(u)^2 + cos(u)^2", "1").equivalent);
    }

    #[test]
    fn power_as_exponential() {
        let s = Sampling::standard().fix("k", 2.7);
        let r = numeric_equiv(&parse("u^k").unwrap(), &parse("exp(k*ln(u))").unwrap(), &s);
        assert!(r.equivalent);
    }

    #[test]
    fn inequivalent_with_witness() {
        let r = eq("u^2", "u^3");
        assert!(!r.equivalent);
        let w = r.witness.unwrap();
        assert!(w.point.contains_key("u"));
        assert!(r.max_deviation > 0.0);
    }

    #[test]
    fn domain_error_is_a_witness() {
        let r = eq("ln(x)", "ln(x)");
        assert!(!r.equivalent);
        assert!(r.witness.unwrap().left.is_err());
    }

    #[test]
    fn deterministic_points() {
        let names: BTreeSet<String> = ["u".to_string()].into_iter().collect();
        let s = Sampling::standard();
        assert_eq!(s.points(&names), s.points(&names));
        assert!(s.points(&names).iter().all(|p| (0.5..2.0).contains(&p["u"])));
    }
}
