use super::*;

fn eq(d: &str, k1: &str, k2: &str, r: &str) -> RdcEquation {
    RdcEquation::parse(d, k1, k2, r).unwrap()
}

fn s() -> Sampling {
    Sampling::standard().with_samples(40)
}

fn p(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn catalog_loads() {
    let c = case_catalog();
    assert_eq!((c.table1.len(), c.table2.len(), c.table4.len()), (9, 32, 22));
}

#[test]
fn heat_with_linear_source_goes_through_fpt() {
    let r = classify(&eq("1", "0", "0", "-2*u"), &s()).unwrap();
    assert_eq!(r.case, Some(3), "{r:#?}");
    assert_eq!(r.via_table2, Some(5));
    assert!(r.verified && r.chain_verified, "{r:#?}");
}

#[test]
fn power_case_with_two_extra_generators() {
    // u_t = Δ(u^k) form with k = 1 and the special convection and source.
    let r = classify(&eq("u", "8*u", "0", "8*u^2"), &s()).unwrap();
    assert_eq!(r.case, Some(17), "{r:#?}");
    assert!(r.verified && r.chain_verified, "{r:#?}");
}

#[test]
fn restriction_is_enforced_for_bases() {
    let e = mai_basis(16, &p(&[("k", 0.0), ("lambda3", 1.0)]));
    assert!(matches!(e, Err(ClassifyError::RestrictionViolated { case: 16, .. })));
    assert!(matches!(mai_basis(40, &p(&[])), Err(ClassifyError::UnknownCase { .. })));
}

#[test]
fn listed_bases_verify_on_their_templates() {
    for (case, params) in [(9, p(&[("k", -1.0)])), (22, p(&[("gamma1", 1.0), ("q", 2.0)]))] {
        let row = case_row(4, case).unwrap();
        let mut a = Assignment::from_values(params.clone());
        for (n, k) in &row.template.params {
            if let ParamKind::Fixed { value } = k {
                a.values.insert(n.clone(), *value);
            }
        }
        let e = row.template.instantiate(&a).unwrap();
        let checks = verify_basis(&e, &mai_basis(case, &params).unwrap(), &s());
        assert!(checks.iter().all(|c| c.pass), "{case}: {checks:#?}");
    }
}

#[test]
fn generic_equation_has_only_the_kernel() {
    let r = classify(&eq("1 + u^2", "sin(u)", "0", "u^3"), &s()).unwrap();
    assert!(r.principal_only);
    assert!(r.verified);
}

#[test]
fn first_table_literal_match() {
    let m = match_table1(&eq("exp(u)", "u", "0", "3*exp(-u)")).unwrap();
    assert_eq!(m.case, 3);
    assert!((m.params["lambda3"] - 3.0).abs() < 1e-9);
}

#[test]
fn porous_fisher_burgers_reaches_the_six_dimensional_case() {
    let r = classify(&eq("u", "8*u", "0", "8*u^2 - 8*u"), &s()).unwrap();
    assert_eq!((r.case, r.via_table2), (Some(17), Some(27)), "{r:#?}");
    assert_eq!(r.params["k"], 1.0);
    assert!(r.verified && r.chain_verified);
    assert_eq!(r.basis.len(), 6);
    assert!(r.chain.iter().any(|c| matches!(c, ChainStep::Fpt { id: 7, .. })));
}

#[test]
fn cases_sixteen_and_seventeen_are_split_by_one_invariant() {
    // With K = u^k the special source amplitude is 1/(4(k+1)).
    for k in [1.0_f64, 2.0, -2.0] {
        let lam = 1.0 / (4.0 * (k + 1.0));
        let special = RdcEquation::parse("u^k", "u^k", "0", "lambda3*u^(k+1)").unwrap().with_params(&[("k", k), ("lambda3", lam)]);
        assert_eq!(classify(&special, &s()).unwrap().case, Some(17), "k = {k}");
        // The value excluded as listed is not special.
        let listed = 4.0 * (k + 1.0) / (k * k);
        let other = RdcEquation::parse("u^k", "u^k", "0", "lambda3*u^(k+1)").unwrap().with_params(&[("k", k), ("lambda3", listed)]);
        let r = classify(&other, &s()).unwrap();
        assert_eq!(r.case, Some(16), "k = {k}: {r:#?}");
        assert!(r.notes.is_empty());
    }
    assert!(case_row(4, 16).unwrap().printed_restrictions.is_some());
}

#[test]
fn spec_level_examples() {
    let burgers = classify(&eq("1", "u", "0", "0"), &s()).unwrap();
    assert_eq!(burgers.case, Some(19));
    let conformal = classify(&eq("u^(-1)", "0", "0", "0"), &s()).unwrap();
    assert_eq!(conformal.case, Some(9));
    assert_eq!(conformal.dim(), None);
    let arbitrary = classify(&eq("1", "0", "0", "sin(u)"), &s()).unwrap();
    assert_eq!(arbitrary.case, Some(1));
    assert!(arbitrary.basis.iter().any(|b| b.name == "J12"));
}

#[test]
fn power_source_with_constant_diffusivity_is_reported_outside_restriction() {
    // D = 1, R = u^3: the dilation (m-1)D0 - 2u∂u exists although k = 0 is excluded.
    let r = classify(&eq("1", "0", "0", "u^3"), &s()).unwrap();
    assert_eq!(r.case, Some(8), "{r:#?}");
    assert!(r.verified);
    assert_eq!(r.notes.len(), 1);
}
