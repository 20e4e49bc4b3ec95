//! Canonical cases survive random equivalence transformations: classifying
//! the transformed equation recovers the case and its parameters. The
//! acceptance target runs 100 per case; this one runs fewer by default.

mod common;

use lie_rdc::expr::Sampling;

fn per_case() -> usize {
    std::env::var("LIE_RDC_ROUNDTRIP").ok().and_then(|v| v.parse().ok()).unwrap_or(20)
}

#[test]
fn random_transformations_recover_case_and_parameters() {
    let s = Sampling::standard().with_samples(30);
    let r = common::run_roundtrip(per_case(), common::ROUNDTRIP_SEED + 1, &s);
    assert!(r.failures.is_empty(), "{} of {} failed:\n{}", r.failures.len(), r.runs, r.failures.join("\n"));
}
