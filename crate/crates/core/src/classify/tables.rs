//! Whole-table checks: every listed basis on every representative binding,
//! and the form-preserving links from the intermediate table to the final one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{build_basis, case_row, complete, verify_basis, BasisCheck, BasisCorrection, CaseTemplate};
use crate::expr::{Expr, Sampling};
use crate::model::RdcEquation;
use crate::prolong::{is_symmetry, ResidualReport};
use crate::template::Assignment;
use crate::transform::{fpt_apply, fpt_entry, pushforward};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BindingCheck {
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, Expr>,
    pub checks: Vec<BasisCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowCheck {
    pub table: u8,
    pub case: u32,
    /// Checks of the basis as listed.
    pub bindings: Vec<BindingCheck>,
    pub max_residual: f64,
    pub printed_pass: bool,
    /// When the listed basis fails and a correction is recorded: its note and checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correction: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corrected: Vec<BindingCheck>,
    pub pass: bool,
}

impl RowCheck {
    /// Failing (binding, element) pairs, for reporting.
    pub fn failures(&self) -> Vec<(BTreeMap<String, f64>, String, f64)> {
        let mut out = Vec::new();
        for b in &self.bindings {
            if let Some(e) = &b.error {
                out.push((b.params.clone(), e.clone(), f64::INFINITY));
            }
            for c in b.checks.iter().filter(|c| !c.pass) {
                out.push((b.params.clone(), c.name.clone(), c.report.max_residual));
            }
        }
        out
    }
}

fn equation(row: &CaseTemplate, a: &Assignment) -> Result<(RdcEquation, BTreeMap<String, f64>), String> {
    let eq = row.template.instantiate(a).map_err(|e| e.to_string())?;
    let p = complete(row, &a.values).map_err(|e| e.to_string())?;
    Ok((eq, p))
}

/// Every representative assignment of a row that its restrictions allow,
/// with Fixed parameters filled in.
pub fn row_assignments(row: &CaseTemplate) -> Vec<Assignment> {
    row.template.representative_assignments()
}

/// Check the listed basis of `table`/`case` at every representative binding.
pub fn verify_row(table: u8, case: u32, s: &Sampling) -> Result<RowCheck, super::ClassifyError> {
    let row = case_row(table, case)?;
    let bindings = check_bindings(row, None, s);
    let max_residual = bindings
        .iter()
        .flat_map(|b| b.checks.iter().map(|c| c.report.max_residual))
        .fold(0.0_f64, f64::max);
    let printed_pass = !bindings.is_empty() && bindings.iter().all(|b| b.pass);
    let mut out = RowCheck {
        table,
        case,
        bindings,
        max_residual,
        printed_pass,
        correction: None,
        corrected: Vec::new(),
        pass: printed_pass,
    };
    if let (false, Some(c)) = (printed_pass, &row.correction) {
        out.corrected = check_bindings(row, Some(c), s);
        out.pass = out.corrected.iter().all(|b| b.pass);
        out.correction = Some(c.note.clone());
    }
    Ok(out)
}

fn check_bindings(row: &CaseTemplate, fix: Option<&BasisCorrection>, s: &Sampling) -> Vec<BindingCheck> {
    let mut bindings = Vec::new();
    for a in row_assignments(row) {
        let mut check = BindingCheck {
            params: a.values.clone(),
            functions: a.functions.clone(),
            checks: Vec::new(),
            error: None,
            pass: false,
        };
        let basis = |p: BTreeMap<String, f64>| {
            let p = fix.map_or(p.clone(), |c| c.rebind(&p));
            build_basis(row, &p).map_err(|e| e.to_string())
        };
        match equation(row, &a).and_then(|(eq, p)| Ok((eq, basis(p)?))) {
            Ok((eq, basis)) => {
                check.checks = verify_basis(&eq, &basis, s);
                check.pass = check.checks.iter().all(|c| c.pass);
            }
            Err(e) => check.error = Some(e),
        }
        bindings.push(check);
    }
    bindings
}

/// One pushed-forward generator tested on the image equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushCheck {
    pub source: String,
    pub pushed: String,
    pub report: ResidualReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBinding {
    pub params: BTreeMap<String, f64>,
    /// The image equation is an instance of the target row.
    pub target_matches: bool,
    pub pushed: Vec<PushCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub pass: bool,
}

/// One intermediate-to-final correspondence: source case, transformation, image case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkCheck {
    pub source_case: u32,
    pub fpt: u32,
    pub image_case: u32,
    pub bindings: Vec<LinkBinding>,
    pub max_residual: f64,
    pub pass: bool,
}

fn link_binding(row: &CaseTemplate, id: u32, image: &CaseTemplate, a: &Assignment, s: &Sampling) -> Result<LinkBinding, String> {
    let (src, p) = equation(row, a)?;
    let entry = fpt_entry(id).ok_or_else(|| format!("no FPT{id}"))?;
    let app = fpt_apply(&src, entry, s).map_err(|e| e.to_string())?;
    let target_matches = image.template.match_with(&app.target, &BTreeMap::new(), false).is_some();
    let p = row.correction.as_ref().map_or(p.clone(), |c| c.rebind(&p));
    let basis = build_basis(row, &p).map_err(|e| e.to_string())?;
    // Sample the image times of the source box, where the inverse map is defined.
    let (t0, t1) = s.ranges.get("t").copied().unwrap_or((-1.0, 1.0));
    let image_t = |t: f64| app.map.forward(&[t, 0.0, 0.0, 1.0]).map(|q| q[0]);
    let (a0, a1) = image_t(t0).zip(image_t(t1)).ok_or_else(|| format!("FPT{id} undefined on the time box"))?;
    let s = &s.clone().range("t", a0.min(a1), a0.max(a1));
    let mut pushed = Vec::new();
    for el in &basis {
        for g in el.instances() {
            let h = pushforward(g, &app.map).map_err(|e| e.to_string())?;
            let report = is_symmetry(&app.target, &h, s).compact();
            pushed.push(PushCheck { source: g.name.clone(), pushed: h.display(), report });
        }
    }
    let pass = target_matches && pushed.iter().all(|c| c.report.pass);
    Ok(LinkBinding { params: a.values.clone(), target_matches, pushed, error: None, pass })
}

/// Push the source basis of an intermediate-table case through its linking
/// transformation and test every image on the transformed equation.
pub fn verify_link(source_case: u32, s: &Sampling) -> Result<LinkCheck, super::ClassifyError> {
    let row = case_row(2, source_case)?;
    let (Some(id), Some(image)) = (row.fpt, row.image) else {
        return Err(super::ClassifyError::Catalog(format!("case {source_case} has no linking transformation")));
    };
    let image_row = case_row(4, image)?;
    let bindings: Vec<LinkBinding> = row_assignments(row)
        .iter()
        .map(|a| {
            link_binding(row, id, image_row, a, s).unwrap_or_else(|e| LinkBinding {
                params: a.values.clone(),
                target_matches: false,
                pushed: Vec::new(),
                error: Some(e),
                pass: false,
            })
        })
        .collect();
    let max_residual = bindings
        .iter()
        .flat_map(|b| b.pushed.iter().map(|c| c.report.max_residual))
        .fold(0.0_f64, f64::max);
    let pass = !bindings.is_empty() && bindings.iter().all(|b| b.pass);
    Ok(LinkCheck { source_case, fpt: id, image_case: image, bindings, max_residual, pass })
}

/// Source cases of the intermediate table that need a linking transformation.
pub fn linked_cases() -> Vec<u32> {
    super::case_catalog().table2.iter().filter(|r| r.fpt.is_some()).map(|r| r.case).collect()
}

/// A row the equation instantiates literally (no transformation), with its basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiteralMatch {
    pub table: u8,
    pub case: u32,
    pub params: BTreeMap<String, f64>,
    pub basis: Vec<super::BasisElement>,
}

/// Search the intermediate table, then the final one, for a row whose template
/// `eq` instantiates as written and whose listed basis verifies on it.
/// `prefer_fpt` puts rows linked by that transformation first.
pub fn literal_basis(eq: &RdcEquation, prefer_fpt: Option<u32>, s: &Sampling) -> Option<LiteralMatch> {
    let cat = super::case_catalog();
    let mut rows: Vec<(u8, &CaseTemplate)> = cat.table2.iter().map(|r| (2, r)).collect();
    rows.sort_by_key(|(_, r)| r.fpt != prefer_fpt || prefer_fpt.is_none());
    rows.extend(cat.table4.iter().map(|r| (4, r)));
    for (table, row) in rows {
        let Some(a) = row.template.match_literal(eq) else { continue };
        let Ok(p) = complete(row, &a.values) else { continue };
        let p = row.correction.as_ref().map_or(p.clone(), |c| c.rebind(&p));
        let Ok(basis) = build_basis(row, &p) else { continue };
        if verify_basis(eq, &basis, s).iter().all(|c| c.pass) {
            return Some(LiteralMatch { table, case: row.case, params: a.values, basis });
        }
    }
    None
}
