use super::*;
use crate::expr::parse;
use crate::model::generator_from_spec;

fn s() -> Sampling {
    Sampling::standard().with_samples(40)
}

fn gen(spec: &str) -> Generator {
    generator_from_spec(spec, &BTreeMap::new()).unwrap()
}

#[test]
fn invariant_surface_condition() {
    let f = parse("sin(t)*y^2").unwrap();
    assert!(invariance_of_solution(&gen("∂x"), &f, &standard_box(), &s()).pass);
    let g = parse("exp(t)").unwrap();
    assert!(!invariance_of_solution(&gen("∂t"), &g, &standard_box(), &s()).pass);
}

#[test]
fn characteristic_system_lists_zero_denominators() {
    let c = characteristic_system(&gen("∂t"));
    assert!(c.display.contains("dx = 0") && c.display.contains("du = 0"), "{}", c.display);
}

#[test]
fn heat_solution_and_oracle_agree() {
    let eq = RdcEquation::parse("1", "0", "0", "0").unwrap();
    let good = ClosedFormSolution::new("heat", parse("exp(-2*t)*sin(x)*cos(y)").unwrap(), eq.clone());
    let r = verify_solution(&eq, &good, &s());
    assert!(r.pass && r.oracle_agrees, "{r:#?}");
    let bad = ClosedFormSolution::new("not heat", parse("exp(-t)*sin(x)*cos(y)").unwrap(), eq.clone());
    let r = verify_solution(&eq, &bad, &s());
    assert!(!r.pass && r.oracle_agrees, "{r:#?}");
}

#[test]
fn constant_one_solves_fisher() {
    let eq = t0_equation(3.0, 1.0);
    let r = verify_solution(&eq, &ClosedFormSolution::new("one", Expr::int(1), eq.clone()), &s());
    assert!(r.pass);
}

#[test]
fn reduced_coefficient_is_the_norm() {
    for (c1, c2) in [(0.6, 0.8), (2.0_f64.sqrt(), 2.0_f64.sqrt()), (0.0, 1.0)] {
        let r = reduce_via_r1r2(&t1_equation(), c1, c2, &s()).unwrap();
        assert!((r.coefficient - (c1 * c1 + c2 * c2)).abs() < 1e-9, "{r:#?}");
        assert!(r.consistency < 1e-10 && r.operator_check.pass, "{r:#?}");
    }
}

#[test]
fn reduction_refuses_other_equations() {
    let other = RdcEquation::parse("u", "7*u", "0", "8*u^2").unwrap();
    assert!(matches!(reduce_via_r1r2(&other, 1.0, 0.0, &s()), Err(ReduceError::TemplateMismatch(_))));
}

#[test]
fn boussinesq_solutions_solve_the_reduced_equation() {
    for b in boussinesq_solutions() {
        assert!(boussinesq_residual(&b, 1.0, &s()).pass, "{}", b.name);
    }
    // Not a solution with the wrong coefficient.
    assert!(!boussinesq_residual(&boussinesq_solutions()[1], 2.0, &s()).pass);
}

#[test]
fn steady_state_of_the_self_similar_family() {
    let eq = t0_equation(8.0, -8.0);
    let u = ClosedFormSolution::new("steady", parse("(4/3)*cos(y)^2").unwrap(), eq.clone());
    assert!(verify_solution(&eq, &u, &s()).pass);
}

#[test]
fn printed_and_regenerated_families_agree() {
    let c = compare_printed(0.6, 0.8, 2.0, 0.5, 1.0, &s());
    assert_eq!(c.len(), 2);
    assert!(c.iter().all(|c| c.agree), "{c:#?}");
    // With c1² + c2² ≠ 1 only the self-similar family is compared, with the rescaled c5.
    let c = compare_printed(1.2, -0.5, 2.0, 0.5, 1.0, &s());
    assert_eq!(c.len(), 1);
    assert!(c[0].agree, "{c:#?}");
}

#[test]
fn galilei_lift_removes_constant_convection() {
    assert!(porous::galilei_check(&s()).pass);
}

#[test]
fn worked_example_passes() {
    let r = reduce_demo(&s()).unwrap();
    assert!(r.pass, "{r:#?}");
    assert!(r.printed.iter().all(|p| p.pass), "{:#?}", r.printed);
}
