//! End-to-end runs of the `lie-rdc` binary: exit codes, JSON on stdout
//! validated against the shipped schema, summaries on stderr.

use std::process::Command;

use serde_json::Value;

const SCHEMA: &str = include_str!("../schemas/report.schema.json");

struct Run {
    code: i32,
    json: Value,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_lie-rdc"))
        .args(args)
        .arg("--json")
        .arg("--samples")
        .arg("40")
        .env_remove("LIE_RDC_SEED")
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json: Value = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {stdout}"));
    let schema: Value = serde_json::from_str(SCHEMA).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    if let Err(errs) = compiled.validate(&json) {
        let msgs: Vec<String> = errs.map(|e| format!("{e} at {}", e.instance_path)).collect();
        panic!("report violates schema: {msgs:#?}");
    }
    Run { code: out.status.code().unwrap(), json, stderr: String::from_utf8(out.stderr).unwrap() }
}

#[test]
fn classify_examples() {
    let r = run(&["classify", "-e", "D=1;K1=u;K2=0;R=0"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["result"]["case"], 19);
    assert!(r.stderr.contains("Case 19"));

    let r = run(&["classify", "-e", "D=u^-1;K1=0;K2=0;R=0"]);
    assert_eq!(r.json["result"]["case"], 9);
    let basis = r.json["result"]["basis"].as_array().unwrap();
    assert!(basis.iter().any(|b| b["family"] == true));

    let r = run(&["classify", "-e", "D=1;K1=0;K2=0;R=sin(u)"]);
    assert_eq!(r.json["result"]["case"], 1);
    let names: Vec<&str> = r.json["result"]["basis"].as_array().unwrap().iter().map(|b| b["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["dt", "dx", "dy", "J12"]);
}

#[test]
fn classify_error_codes() {
    assert_eq!(run(&["classify", "-e", "D=1+;R=0"]).code, 2);
    let r = run(&["classify", "-e", "D=-1-u^2"]);
    assert_eq!(r.code, 3);
    assert_eq!(r.json["result"]["error"], "domain");
}

#[test]
fn check_symmetry_examples() {
    for g in ["Pi", "J12"] {
        let r = run(&["check-symmetry", "-e", "D=1", "-g", g]);
        assert_eq!(r.code, 0, "{g}: {}", r.stderr);
    }
    let r = run(&["check-symmetry", "-e", "D=1;K1=u", "-g", "J12"]);
    assert_eq!(r.code, 1);
    assert!(r.json["result"]["report"]["witness"].is_object());
    assert_eq!(run(&["check-symmetry", "-e", "D=1", "-g", "Nope"]).code, 2);
}

#[test]
fn transform_examples() {
    let r = run(&["transform", "-e", "D=exp(u);K1=u;R=exp(-u)", "--et", "theta0=0"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["result"]["source"], r.json["result"]["target"]);

    // Intermediate case 29 with σ = 1 through entry 8 is the Burgers form.
    let r = run(&["transform", "-e", "D=1;K1=u;K2=0;R=1", "--fpt", "8", "--push-generators"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.json["result"]["pushed"]["case"], 29);
    assert_eq!(r.json["result"]["pushed"]["pass"], true);
    let spec = r.json["result"]["equation"].as_str().unwrap().to_string();
    let back = run(&["classify", "-e", &spec]);
    assert_eq!(back.json["result"]["case"], 19, "{spec}");

    let r = run(&["transform", "-e", "D=1;K1=u;K2=0;R=1", "--fpt", "3"]);
    assert_eq!(r.code, 4);
    assert_eq!(r.json["result"]["error"], "template-mismatch");
}

#[test]
fn verify_solution_and_demo() {
    let r = run(&["verify-solution", "-e", "D=u;K1=8*u;K2=0;R=-8*u*(1-u)", "-u", "(4/3)*cos(y)^2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let r = run(&["verify-solution", "-e", "D=u;K1=8*u;K2=0;R=-8*u*(1-u)", "-u", "cos(y)^2"]);
    assert_eq!(r.code, 1);

    let r = run(&["reduce-demo"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let res = &r.json["result"];
    assert!(res["reduction"]["reduced"].as_str().unwrap().contains("phi_t"));
    assert_eq!(res["lifted"].as_array().unwrap().len(), 3);
    assert!(res["comparisons"].as_array().unwrap().iter().all(|c| c["agree"] == true));
}

#[test]
fn bracket_table_of_the_euclid_extension() {
    let r = run(&["bracket-table", "-g", "dx", "-g", "dy", "-g", "R1", "-g", "R2", "--bind", "k=1"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json["result"]["dimension"], 4);
    assert_eq!(r.json["result"]["table"]["closed"], true);
}

#[test]
fn reports_are_deterministic_for_a_seed() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    let a = run(&["--seed", "7", "check-symmetry", "-e", "D=1;K1=u", "-g", "J12"]);
    let b = run(&["--seed", "7", "check-symmetry", "-e", "D=1;K1=u", "-g", "J12"]);
    assert_eq!(a.json["seed"], 7);
    assert_eq!(strip(a.json), strip(b.json));
}

#[test]
fn equation_from_file() {
    let dir = std::env::temp_dir().join(format!("lie-rdc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let f = dir.join("burgers.txt");
    std::fs::write(&f, "# two-dimensional Burgers\nD=1\nK1=u\n").unwrap();
    let r = run(&["classify", "--file", f.to_str().unwrap()]);
    assert_eq!(r.json["result"]["case"], 19);
    std::fs::remove_dir_all(dir).ok();
}
