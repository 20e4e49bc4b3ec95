//! Named operators and the three infinite families.

use std::collections::BTreeMap;

use super::generator::{Constraint, FamilyWitness, Generator, GeneratorFamily};
use super::ModelError;
use crate::expr::{parse, Expr};

struct Entry {
    name: &'static str,
    coeffs: [&'static str; 4],
    params: &'static [&'static str],
}

const fn e(name: &'static str, coeffs: [&'static str; 4], params: &'static [&'static str]) -> Entry {
    Entry { name, coeffs, params }
}

const CATALOG: &[Entry] = &[
    e("dt", ["1", "0", "0", "0"], &[]),
    e("dx", ["0", "1", "0", "0"], &[]),
    e("dy", ["0", "0", "1", "0"], &[]),
    e("du", ["0", "0", "0", "1"], &[]),
    e("J12", ["0", "y", "-x", "0"], &[]),
    e("D0", ["2*t", "x", "y", "0"], &[]),
    e("D1", ["0", "k*x", "k*y", "2*u"], &["k"]),
    e("D2", ["0", "x", "y", "2"], &[]),
    e("D3", ["k*t", "0", "0", "-u"], &["k"]),
    e("D4", ["delta*t", "0", "0", "-1"], &["delta"]),
    e("Gx", ["0", "t", "0", "-(1/2)*x*u"], &[]),
    e("Gy", ["0", "0", "t", "-(1/2)*y*u"], &[]),
    e("I", ["0", "0", "0", "u"], &[]),
    e("Pi", ["t^2", "t*x", "t*y", "-(t + (x^2 + y^2)/4)*u"], &[]),
    e("calGx", ["0", "exp(gamma1*t)", "0", "-(1/2)*gamma1*x*u*exp(gamma1*t)"], &["gamma1"]),
    e("calGy", ["0", "0", "exp(gamma1*t)", "-(1/2)*gamma1*y*u*exp(gamma1*t)"], &["gamma1"]),
    e("T1", ["exp(-gamma1*k*t)", "0", "0", "gamma1*u*exp(-gamma1*k*t)"], &["gamma1", "k"]),
    e("T2", ["exp(-gamma1*t)", "0", "0", "gamma1*exp(-gamma1*t)"], &["gamma1"]),
    e("calG1", ["0", "exp(gamma1*t)", "0", "-gamma1*exp(gamma1*t)"], &["gamma1"]),
    e("calG2", ["0", "exp(gamma1*t)", "0", "-gamma1*u*exp(gamma1*t)"], &["gamma1"]),
    e("G0", ["0", "t", "0", "-1"], &[]),
    e("G1", ["0", "t", "0", "-u"], &[]),
    e("Y", ["0", "0", "0", "exp(t - gamma1*x)*u"], &["gamma1"]),
    e("R1", ["0", "exp(-x)*cos(y)", "-exp(-x)*sin(y)", "-(2/k)*exp(-x)*cos(y)*u"], &["k"]),
    e("R2", ["0", "exp(-x)*sin(y)", "exp(-x)*cos(y)", "-(2/k)*exp(-x)*sin(y)*u"], &["k"]),
];

/// Names accepted by [`catalog_generator`].
pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|e| e.name).collect()
}

fn canonical_name(name: &str) -> &str {
    match name {
        "∂t" | "Dt" => "dt",
        "∂x" | "Dx" => "dx",
        "∂y" | "Dy" => "dy",
        "∂u" | "Du" => "du",
        "Π" => "Pi",
        other => other,
    }
}

/// A named operator with its parameters bound to numbers.
pub fn catalog_generator(name: &str, bindings: &BTreeMap<String, f64>) -> Result<Generator, ModelError> {
    let key = canonical_name(name.trim());
    let entry = CATALOG.iter().find(|e| e.name == key).ok_or_else(|| ModelError::UnknownGenerator(name.to_string()))?;
    for p in entry.params {
        if !bindings.contains_key(*p) {
            return Err(ModelError::MissingParameter { generator: key.to_string(), param: p.to_string() });
        }
    }
    let used: BTreeMap<String, f64> =
        entry.params.iter().map(|p| (p.to_string(), bindings[*p])).collect();
    let mut cs = Vec::with_capacity(4);
    for c in entry.coeffs {
        cs.push(parse(c)?.bind_params(&used).simplify());
    }
    Ok(Generator::from_coeffs(key, cs.try_into().unwrap()))
}

/// `⟨∂t, ∂x, ∂y⟩`.
pub fn translations() -> Vec<Generator> {
    let none = BTreeMap::new();
    ["dt", "dx", "dy"].iter().map(|n| catalog_generator(n, &none).unwrap()).collect()
}

fn heat_generator(name: &str, b: &Expr) -> Generator {
    Generator::new(name, Expr::zero(), Expr::zero(), Expr::zero(), b.clone())
}

/// `A ∂x + B ∂y - 2 u A_x ∂u`.
pub fn cauchy_riemann_generator(name: &str, a: &Expr, b: &Expr) -> Generator {
    let eta = (Expr::int(-2) * Expr::var("u") * a.diff("x")).simplify();
    Generator::new(name, Expr::zero(), a.clone(), b.clone(), eta)
}

/// Witness slot functions for the families, as text.
const HEAT_WITNESSES: [&str; 4] = ["1", "x", "x^2 + 2*t", "(exp(t + x) + exp(t - x))/2"];
const SOURCE_PLUS: [&str; 3] = ["exp(t)", "x*exp(t)", "exp(2*t + x)"];
const SOURCE_MINUS: [&str; 3] = ["exp(-t)", "x*exp(-t)", "exp(x)"];
const CR_WITNESSES: [(&str, &str); 3] = [("1", "0"), ("x", "y"), ("x^2 - y^2", "2*x*y")];

/// `Q1inf`, `Q2inf+`, `Q2inf-` or `Xinf`, each with its concrete witnesses.
pub fn family(name: &str) -> Result<GeneratorFamily, ModelError> {
    let p = |s: &str| parse(s).unwrap();
    let single = |fam: &str, constraint: Constraint, list: &[&str]| GeneratorFamily {
        name: fam.to_string(),
        template: "b(t,x,y) ∂u".into(),
        constraint,
        witnesses: list
            .iter()
            .map(|s| {
                let b = p(s);
                FamilyWitness { functions: vec![b.clone()], generator: heat_generator(&format!("{fam}[{s}]"), &b) }
            })
            .collect(),
    };
    match name {
        "Q1inf" => Ok(single("Q1inf", Constraint::HeatEquation, &HEAT_WITNESSES)),
        "Q2inf+" => Ok(single("Q2inf+", Constraint::HeatWithLinearSource { sign: 1 }, &SOURCE_PLUS)),
        "Q2inf-" => Ok(single("Q2inf-", Constraint::HeatWithLinearSource { sign: -1 }, &SOURCE_MINUS)),
        "Xinf" => Ok(GeneratorFamily {
            name: "Xinf".into(),
            template: "A(x,y) ∂x + B(x,y) ∂y - 2 u A_x ∂u".into(),
            constraint: Constraint::CauchyRiemann,
            witnesses: CR_WITNESSES
                .iter()
                .map(|(a, b)| {
                    let (a, b) = (p(a), p(b));
                    let g = cauchy_riemann_generator(&format!("Xinf[{a}, {b}]"), &a, &b);
                    FamilyWitness { functions: vec![a, b], generator: g }
                })
                .collect(),
        }),
        other => Err(ModelError::UnknownGenerator(other.to_string())),
    }
}

/// Split at top-level occurrences of the given byte, keeping track of parentheses.
fn split_top(s: &str, sep: u8) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.bytes().enumerate() {
        match c {
            b'(' => depth += 1,
            b')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Split a sum at top-level `+`/`-`; each part keeps its sign.
fn split_terms(s: &str) -> Vec<(bool, &str)> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let mut neg = false;
    for i in 0..bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'+' | b'-' if depth == 0 => {
                let prev = s[..i].trim_end();
                let binary = match prev.as_bytes().last() {
                    None => false,
                    Some(b'*' | b'/' | b'^' | b'(' | b',') => false,
                    Some(b'e' | b'E') => {
                        let p = prev.as_bytes();
                        !(p.len() >= 2 && p[p.len() - 2].is_ascii_digit())
                    }
                    _ => true,
                };
                if binary {
                    out.push((neg, &s[start..i]));
                    neg = bytes[i] == b'-';
                    start = i + 1;
                } else if prev.is_empty() {
                    neg = bytes[i] == b'-';
                    start = i + 1;
                }
            }
            _ => {}
        }
    }
    out.push((neg, &s[start..]));
    out
}

fn bound_expr(text: &str, bindings: &BTreeMap<String, f64>, context: &str) -> Result<Expr, ModelError> {
    let e = parse(text)?.bind_params(bindings).simplify();
    if let Some(p) = e.free_names().into_iter().find(|n| !crate::expr::is_variable_name(n)) {
        return Err(ModelError::MissingParameter { generator: context.to_string(), param: p });
    }
    Ok(e)
}

fn atom(term: &str, bindings: &BTreeMap<String, f64>) -> Result<Option<Generator>, ModelError> {
    let term = term.trim();
    if let Some(open) = term.find('(') {
        let head = term[..open].trim();
        if term.ends_with(')') && ["Q1inf", "Q2inf", "Xinf", "X"].contains(&head) {
            let inner = &term[open + 1..term.len() - 1];
            let args = split_top(inner, b',')
                .into_iter()
                .map(|a| bound_expr(a, bindings, head))
                .collect::<Result<Vec<_>, _>>()?;
            return match (head, args.as_slice()) {
                ("Q1inf" | "Q2inf", [b]) => Ok(Some(heat_generator(term, b))),
                ("Xinf" | "X", [a, b]) => Ok(Some(cauchy_riemann_generator(term, a, b))),
                _ => Err(ModelError::UnknownGenerator(term.to_string())),
            };
        }
        return Ok(None);
    }
    match catalog_generator(term, bindings) {
        Ok(g) => Ok(Some(g)),
        Err(ModelError::UnknownGenerator(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Parse a generator description: a linear combination such as `D3 + p*J12`,
/// `Pi + gamma1*t^2*I`, `Q1inf(x^2 + 2*t)`, `Xinf(x, y)`, or an explicit field
/// `field(xi0; xi1; xi2; eta)`. Coefficients may depend on t, x, y, u and parameters.
pub fn generator_from_spec(spec: &str, bindings: &BTreeMap<String, f64>) -> Result<Generator, ModelError> {
    let spec = spec.trim();
    if let Some(inner) = spec.strip_prefix("field(").and_then(|s| s.strip_suffix(')')) {
        let parts: Vec<&str> = inner.split(';').collect();
        if parts.len() != 4 {
            return Err(ModelError::Spec("field(...) needs four coefficients separated by `;`".into()));
        }
        let cs = parts.iter().map(|p| bound_expr(p, bindings, "field")).collect::<Result<Vec<_>, _>>()?;
        return Ok(Generator::from_coeffs(spec, cs.try_into().unwrap()));
    }
    let mut terms: Vec<(Expr, Generator)> = Vec::new();
    for (neg, term) in split_terms(spec) {
        let factors = split_top(term, b'*');
        let last = factors.last().copied().unwrap_or("");
        let g = atom(last, bindings)?.ok_or_else(|| ModelError::UnknownGenerator(term.trim().to_string()))?;
        let coef_text = &term[..term.len() - last.len()];
        let coef_text = coef_text.trim().trim_end_matches('*');
        let mut c = if coef_text.trim().is_empty() { Expr::one() } else { bound_expr(coef_text, bindings, spec)? };
        if neg {
            c = -c;
        }
        terms.push((c, g));
    }
    let refs: Vec<(Expr, &Generator)> = terms.iter().map(|(c, g)| (c.clone(), g)).collect();
    let mut g = Generator::combination(spec, &refs);
    if terms.len() == 1 && terms[0].0.is_one() {
        g.name = terms[0].1.name.clone();
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Sampling;

    fn b(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn text(g: &Generator) -> [String; 4] {
        g.coeffs().map(|e| e.render())
    }

    #[test]
    fn rotation() {
        let g = catalog_generator("J12", &b(&[])).unwrap();
        assert_eq!(text(&g), ["0", "y", "-x", "0"]);
    }

    #[test]
    fn projective() {
        let g = catalog_generator("Pi", &b(&[])).unwrap();
        let want = ["t^2", "t*x", "t*y", "-(t + (x^2+y^2)/4)*u"].map(|s| parse(s).unwrap());
        let s = Sampling::standard();
        for (a, w) in g.coeffs().iter().zip(&want) {
            assert!(crate::expr::numeric_equiv(a, w, &s).equivalent);
        }
    }

    #[test]
    fn bound_parameters() {
        let g = catalog_generator("D3", &b(&[("k", 1.0)])).unwrap();
        assert_eq!(text(&g), ["t", "0", "0", "-u"]);
        assert_eq!(
            catalog_generator("T1", &b(&[("gamma1", 1.0)])),
            Err(ModelError::MissingParameter { generator: "T1".into(), param: "k".into() })
        );
        assert!(matches!(catalog_generator("Z9", &b(&[])), Err(ModelError::UnknownGenerator(_))));
    }

    #[test]
    fn families_satisfy_their_constraints() {
        let s = Sampling::standard();
        for name in ["Q1inf", "Q2inf+", "Q2inf-", "Xinf"] {
            let f = family(name).unwrap();
            assert!(f.witness_residual(&s) < 1e-9, "{name}");
        }
    }

    #[test]
    fn combinations() {
        let bind = b(&[("k", 2.0), ("p", 3.0)]);
        let g = generator_from_spec("D3 + p*J12", &bind).unwrap();
        assert_eq!(text(&g), ["2*t", "3*y", "-3*x", "-u"]);
        let g = generator_from_spec("Pi - t^2*I", &bind).unwrap();
        let pi = catalog_generator("Pi", &bind).unwrap();
        assert_eq!(g.xi0, pi.xi0);
        let x = generator_from_spec("Xinf(x^2 - y^2, 2*x*y)", &bind).unwrap();
        assert_eq!(x.eta.render(), "-4*u*x");
        let f = generator_from_spec("field(1; 0; 0; u)", &bind).unwrap();
        assert_eq!(f.eta.render(), "u");
        assert!(generator_from_spec("D3 + q*J12", &bind).is_err());
    }
}
