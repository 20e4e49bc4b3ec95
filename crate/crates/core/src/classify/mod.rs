//! Group classification: reduce an equation to a canonical case and report its
//! maximal Lie invariance algebra, checked generator by generator.
//!
//! The flow is detect (coefficient shapes) → normalise (closed-form
//! equivalence transformations) → match (catalog templates, strict first) →
//! for cases that are not canonical in the equivalence group, apply the
//! linking form-preserving transformation → verify every basis element.

mod forms;
mod normalize;
mod tables;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{numeric_equiv, Expr, Sampling};
use crate::model::{family, generator_from_spec, translations, Generator, GeneratorFamily, ModelError, RdcEquation};
use crate::prolong::{is_symmetry, ResidualReport};
use crate::template::{Assignment, ParamKind, Restriction, Template, TemplateError};
use crate::transform::{apply_with, discrete_et, et_apply, fpt_apply, fpt_entry, DiscreteEt, EtParams, TransformError};

pub use forms::{detect_form, FormKind, FormTag};
pub use tables::{linked_cases, literal_basis, row_assignments, LiteralMatch, verify_link, verify_row, BindingCheck, LinkBinding, LinkCheck, PushCheck, RowCheck};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("coefficient not of a recognised form: {0}")]
    Unrecognized(String),
    #[error("no case {table}.{case} in the catalog")]
    UnknownCase { table: u8, case: u32 },
    #[error("case {case}: restriction `{restriction}` violated by {params:?}")]
    RestrictionViolated { case: u32, restriction: String, params: BTreeMap<String, f64> },
    #[error("case {case} needs parameter `{param}`")]
    MissingParameter { case: u32, param: String },
    #[error("catalog: {0}")]
    Catalog(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// One row of a classification table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTemplate {
    pub case: u32,
    #[serde(flatten)]
    pub template: Template,
    /// Basis beyond the translations, as generator specs.
    #[serde(default)]
    pub mai: Vec<String>,
    #[serde(default)]
    pub d_family: Vec<String>,
    #[serde(default)]
    pub k_form: Vec<String>,
    /// Table-2 rows only: the linking transformation and the target row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fpt: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<u32>,
    /// Extra condition for parameters to be normal forms (round-trip tests).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roundtrip: Option<String>,
    /// Parameters that are fixed only up to a residual discrete symmetry.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gauge: Vec<String>,
    /// Restrictions as listed, when they were replaced by `corrected_restrictions`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub printed_restrictions: Option<String>,
    #[serde(default, skip_serializing)]
    corrected_restrictions: Option<String>,
    /// Recorded fix for a listed basis that fails as printed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction: Option<BasisCorrection>,
}

/// Rebinding of parameters seen by the basis generators, e.g. `gamma1 <- gamma2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisCorrection {
    pub bind: BTreeMap<String, String>,
    pub note: String,
}

impl BasisCorrection {
    pub fn rebind(&self, p: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
        let mut out = p.clone();
        for (to, from) in &self.bind {
            if let Some(v) = p.get(from) {
                out.insert(to.clone(), *v);
            }
        }
        out
    }
}

impl CaseTemplate {
    /// Dimension used for ordering candidates: infinite parts count as 100.
    pub fn rank(&self) -> usize {
        3 + self.mai.iter().map(|m| if is_family(m) { 100 } else { 1 }).sum::<usize>()
    }

    pub fn is_infinite(&self) -> bool {
        self.mai.iter().any(|m| is_family(m))
    }

    pub fn roundtrip_restriction(&self) -> Option<Restriction> {
        self.roundtrip.as_deref().and_then(|r| Restriction::parse(r).ok())
    }
}

fn is_family(spec: &str) -> bool {
    matches!(spec.trim(), "Q1inf" | "Q2inf" | "Xinf")
}

#[derive(Debug, Clone, Deserialize)]
pub struct CaseCatalog {
    pub table1: Vec<CaseTemplate>,
    pub table2: Vec<CaseTemplate>,
    pub table4: Vec<CaseTemplate>,
}

const CASES_JSON: &str = include_str!("../../data/case_catalog.json");

fn load_cases() -> Result<CaseCatalog, ClassifyError> {
    let mut c: CaseCatalog = serde_json::from_str(CASES_JSON).map_err(|e| ClassifyError::Catalog(e.to_string()))?;
    for row in c.table1.iter_mut().chain(c.table2.iter_mut()).chain(c.table4.iter_mut()) {
        if let Some(fixed) = row.corrected_restrictions.take() {
            let printed = std::mem::replace(
                &mut row.template.restrictions,
                Restriction::parse(&fixed).map_err(|e| ClassifyError::Catalog(e.to_string()))?,
            );
            row.printed_restrictions = Some(printed.text);
        }
    }
    for (t, rows) in [(1, &c.table1), (2, &c.table2), (4, &c.table4)] {
        for row in rows {
            let mut known: Vec<&str> = row.template.params.keys().map(String::as_str).collect();
            known.push("u");
            for name in crate::template::template_names(&row.template) {
                if !known.contains(&name.as_str()) {
                    return Err(ClassifyError::Catalog(format!("table {t} case {}: undeclared `{name}`", row.case)));
                }
            }
        }
    }
    Ok(c)
}

pub fn case_catalog() -> &'static CaseCatalog {
    static CASES: OnceLock<CaseCatalog> = OnceLock::new();
    CASES.get_or_init(|| load_cases().expect("bundled case catalog loads"))
}

pub fn case_row(table: u8, case: u32) -> Result<&'static CaseTemplate, ClassifyError> {
    let c = case_catalog();
    let rows = match table {
        1 => &c.table1,
        2 => &c.table2,
        4 => &c.table4,
        _ => return Err(ClassifyError::UnknownCase { table, case }),
    };
    rows.iter().find(|r| r.case == case).ok_or(ClassifyError::UnknownCase { table, case })
}

/// A basis element: a single generator or an infinite family with witnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BasisElement {
    Generator(Generator),
    Family(GeneratorFamily),
}

impl BasisElement {
    pub fn name(&self) -> &str {
        match self {
            BasisElement::Generator(g) => &g.name,
            BasisElement::Family(f) => &f.name,
        }
    }

    /// The concrete generators to test: the generator itself or every witness.
    pub fn instances(&self) -> Vec<&Generator> {
        match self {
            BasisElement::Generator(g) => vec![g],
            BasisElement::Family(f) => f.witnesses.iter().map(|w| &w.generator).collect(),
        }
    }
}

fn complete(row: &CaseTemplate, params: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, ClassifyError> {
    let mut p = params.clone();
    for (name, kind) in &row.template.params {
        match kind {
            ParamKind::Fixed { value } => {
                p.entry(name.clone()).or_insert(*value);
            }
            ParamKind::Function { .. } => {}
            _ if !p.contains_key(name) => {
                return Err(ClassifyError::MissingParameter { case: row.case, param: name.clone() })
            }
            _ => {}
        }
    }
    Ok(p)
}

fn build_basis(row: &CaseTemplate, p: &BTreeMap<String, f64>) -> Result<Vec<BasisElement>, ClassifyError> {
    let mut out: Vec<BasisElement> = translations().into_iter().map(BasisElement::Generator).collect();
    for spec in &row.mai {
        let el = match spec.trim() {
            "Q1inf" | "Xinf" => BasisElement::Family(family(spec.trim())?),
            "Q2inf" => {
                let g = p.get("gamma1").copied().unwrap_or(1.0);
                BasisElement::Family(family(if g < 0.0 { "Q2inf-" } else { "Q2inf+" })?)
            }
            s => BasisElement::Generator(generator_from_spec(s, p)?.simplify()),
        };
        out.push(el);
    }
    Ok(out)
}

/// Basis of the maximal invariance algebra for `table`/`case` at `params`.
/// Fixed parameters are filled in; restrictions are enforced.
pub fn basis_for(table: u8, case: u32, params: &BTreeMap<String, f64>) -> Result<Vec<BasisElement>, ClassifyError> {
    let row = case_row(table, case)?;
    let p = complete(row, params)?;
    if !row.template.restrictions.holds(&p)? {
        return Err(ClassifyError::RestrictionViolated {
            case,
            restriction: row.template.restrictions.text.clone(),
            params: p,
        });
    }
    build_basis(row, &p)
}

/// Basis for a canonical case of the final classification table.
pub fn mai_basis(case: u32, params: &BTreeMap<String, f64>) -> Result<Vec<BasisElement>, ClassifyError> {
    basis_for(4, case, params)
}

/// Outcome of the invariance test for one basis element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisCheck {
    pub name: String,
    pub family: bool,
    /// Worst report over the element's instances.
    pub report: ResidualReport,
    pub pass: bool,
}

pub fn verify_basis(eq: &RdcEquation, basis: &[BasisElement], s: &Sampling) -> Vec<BasisCheck> {
    basis
        .iter()
        .map(|el| {
            let mut worst: Option<ResidualReport> = None;
            for g in el.instances() {
                let rep = is_symmetry(eq, g, s).compact();
                let worse = worst.as_ref().map_or(true, |w| rep.max_residual > w.max_residual || !rep.pass);
                if worse {
                    worst = Some(rep);
                }
            }
            let report = worst.expect("basis element has an instance");
            BasisCheck {
                name: el.name().to_string(),
                family: matches!(el, BasisElement::Family(_)),
                pass: report.pass,
                report,
            }
        })
        .collect()
}

/// One step of the map from the input equation to its canonical form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "step")]
pub enum ChainStep {
    Et { params: EtParams },
    Discrete { kind: DiscreteEt },
    Fpt { id: u32, params: Assignment },
}

/// Apply a chain to an equation.
pub fn replay_chain(eq: &RdcEquation, chain: &[ChainStep], s: &Sampling) -> Result<RdcEquation, ClassifyError> {
    let mut cur = eq.clone();
    for step in chain {
        cur = match step {
            ChainStep::Et { params } => et_apply(&cur, params),
            ChainStep::Discrete { kind } => discrete_et(&cur, *kind)?,
            ChainStep::Fpt { id, params } => {
                let entry = fpt_entry(*id).ok_or_else(|| ClassifyError::Catalog(format!("no FPT{id}")))?;
                apply_with(&cur, entry, params.clone(), s)?.target
            }
        };
    }
    Ok(cur)
}

/// Coefficient-wise numeric equivalence of two equations on `a`'s u-domain.
pub fn same_equation(a: &RdcEquation, b: &RdcEquation, s: &Sampling) -> bool {
    let s = s.clone().range("u", a.u_domain.0, a.u_domain.1);
    a.bound().iter().zip(b.bound().iter()).all(|(x, y)| numeric_equiv(x, y, &s).equivalent)
}

/// Literal match against the first classification table (no transformation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Match {
    pub case: u32,
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, Expr>,
}

/// Most specific first-table row matching `eq` as written.
pub fn match_table1(eq: &RdcEquation) -> Option<Table1Match> {
    let mut rows: Vec<&CaseTemplate> = case_catalog().table1.iter().collect();
    rows.sort_by(|a, b| b.case.cmp(&a.case));
    let eq = bind_all(eq);
    rows.into_iter().find_map(|r| {
        r.template
            .match_literal(&eq)
            .map(|a| Table1Match { case: r.case, params: a.values, functions: a.functions })
    })
}

fn bind_all(eq: &RdcEquation) -> RdcEquation {
    let [d, k1, k2, r] = eq.bound().map(|e| e.simplify());
    let mut out = RdcEquation::new(d, k1, k2, r);
    out.u_domain = eq.u_domain;
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub input: RdcEquation,
    /// True when only the kernel (translations) is admitted.
    pub principal_only: bool,
    /// Canonical case of the final table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<u32>,
    pub label: String,
    /// Intermediate-table case when the form-preserving step was used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub via_table2: Option<u32>,
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, Expr>,
    pub canonical: RdcEquation,
    pub chain: Vec<ChainStep>,
    pub basis: Vec<BasisCheck>,
    /// All basis elements pass on the canonical equation.
    pub verified: bool,
    /// Replaying the chain on the input reproduces the canonical equation.
    pub chain_verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table1: Option<Table1Match>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ClassificationReport {
    pub fn dim(&self) -> Option<usize> {
        if self.basis.iter().any(|b| b.family) {
            None
        } else {
            Some(self.basis.len())
        }
    }
}

struct Found {
    row: &'static CaseTemplate,
    assignment: Assignment,
    canonical: RdcEquation,
    note: Option<String>,
}

fn candidates(d: normalize::DTag, k: normalize::KTag) -> Vec<&'static CaseTemplate> {
    let c = case_catalog();
    let k_names = k.names();
    let fits = |r: &&CaseTemplate| {
        r.d_family.iter().any(|f| f == "any" || f == d.name()) && r.k_form.iter().any(|f| k_names.contains(&f.as_str()))
    };
    let mut out: Vec<(u8, &'static CaseTemplate)> = c.table4.iter().filter(fits).map(|r| (4, r)).collect();
    out.extend(c.table2.iter().filter(|r| r.fpt.is_some()).filter(fits).map(|r| (2, r)));
    out.sort_by(|(ta, a), (tb, b)| b.rank().cmp(&a.rank()).then(tb.cmp(ta)).then(a.case.cmp(&b.case)));
    out.into_iter().map(|(_, r)| r).collect()
}

fn instantiate(row: &CaseTemplate, a: &Assignment, dom: (f64, f64)) -> Result<RdcEquation, ClassifyError> {
    let mut eq = row.template.instantiate(a)?;
    eq.u_domain = dom;
    Ok(eq)
}

fn try_row(
    row: &'static CaseTemplate,
    eq: &RdcEquation,
    hints: &BTreeMap<String, Vec<f64>>,
    enforce: bool,
) -> Option<Found> {
    let assignment = row.template.match_with(eq, hints, enforce)?;
    let canonical = instantiate(row, &assignment, eq.u_domain).ok()?;
    Some(Found { row, assignment, canonical, note: None })
}

/// Classify `eq`: canonical case, parameters, transformation chain and the
/// verified basis of its maximal Lie invariance algebra.
pub fn classify(eq: &RdcEquation, s: &Sampling) -> Result<ClassificationReport, ClassifyError> {
    eq.check_domain(50)?;
    let table1 = match_table1(eq);
    let norm = normalize::normalize(eq)?;
    let cands = candidates(norm.d, norm.k);

    let mut found = cands.iter().find_map(|r| try_row(r, &norm.eq, &norm.hints, true));

    // A higher-dimensional case reached only outside its printed restriction:
    // accept it when its whole basis verifies, and say so.
    let floor = found.as_ref().map_or(0, |f| f.row.rank());
    for r in cands.iter().filter(|r| r.rank() > floor && !r.template.restrictions.text.trim().is_empty()) {
        let Some(mut f) = try_row(r, &norm.eq, &norm.hints, false) else { continue };
        let Ok(p) = complete(r, &f.assignment.values) else { continue };
        let Ok(basis) = build_basis(r, &p) else { continue };
        let checks = verify_basis(&f.canonical, &basis, &f.canonical.sampling());
        if checks.iter().all(|c| c.pass) {
            f.note = Some(format!(
                "matched case {} outside its restriction `{}`; every basis element verifies",
                r.case, r.template.restrictions.text
            ));
            found = Some(f);
            break;
        }
    }

    let mut chain = norm.chain.clone();
    let mut notes = Vec::new();
    let Some(mut f) = found else {
        let canonical = norm.eq.clone();
        let basis: Vec<BasisElement> = translations().into_iter().map(BasisElement::Generator).collect();
        let checks = verify_basis(&canonical, &basis, s);
        let chain_verified = same_equation(&canonical, &replay_chain(eq, &chain, s)?, s);
        return Ok(ClassificationReport {
            input: eq.clone(),
            principal_only: true,
            case: None,
            label: "kernel".into(),
            via_table2: None,
            params: BTreeMap::new(),
            functions: BTreeMap::new(),
            verified: checks.iter().all(|c| c.pass),
            basis: checks,
            canonical,
            chain,
            chain_verified,
            table1,
            notes,
        });
    };
    notes.extend(f.note.take());

    let mut via = None;
    if let (Some(id), Some(image)) = (f.row.fpt, f.row.image) {
        via = Some(f.row.case);
        let entry = fpt_entry(id).ok_or_else(|| ClassifyError::Catalog(format!("no FPT{id}")))?;
        let app = fpt_apply(&f.canonical, entry, s)?;
        let target_row = case_row(4, image)?;
        let mut target = app.target.clone();
        if target.u_domain.0 >= target.u_domain.1 {
            target.u_domain = f.canonical.u_domain;
        }
        let a = target_row
            .template
            .match_with(&target, &BTreeMap::new(), false)
            .ok_or_else(|| ClassifyError::Catalog(format!("FPT{id} image does not match case {image}")))?;
        if !target_row.template.restrictions.holds(&a.values).unwrap_or(false) {
            notes.push(format!(
                "image of FPT{id} lies outside the restriction `{}` of case {image}",
                target_row.template.restrictions.text
            ));
        }
        chain.push(ChainStep::Fpt { id, params: app.params.clone() });
        let canonical = instantiate(target_row, &a, target.u_domain)?;
        f = Found { row: target_row, assignment: a, canonical, note: None };
    }

    let p = complete(f.row, &f.assignment.values)?;
    let basis = build_basis(f.row, &p)?;
    let sampling = s.clone();
    let checks = verify_basis(&f.canonical, &basis, &sampling);
    let replayed = replay_chain(eq, &chain, s)?;
    let chain_verified = same_equation(&f.canonical, &replayed, s);
    Ok(ClassificationReport {
        input: eq.clone(),
        principal_only: false,
        case: Some(f.row.case),
        label: format!("case {}", f.row.case),
        via_table2: via,
        params: f.assignment.values.clone(),
        functions: f.assignment.functions.clone(),
        canonical: f.canonical,
        chain,
        verified: checks.iter().all(|c| c.pass),
        basis: checks,
        chain_verified,
        table1,
        notes,
    })
}

#[cfg(test)]
mod tests;
