//! Command-line front end.
//!
//! Every command builds a [`Report`]: JSON on stdout with `--json`, a short
//! human summary on stderr always. Exit codes are fixed by [`Exit`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::classify::{classify, literal_basis, ClassificationReport, ClassifyError};
use crate::expr::{parse, Binding, Sampling, DEFAULT_SEED};
use crate::model::{generator_from_spec, structure_constants, ModelError, RdcEquation};
use crate::prolong::{determining_residuals, is_symmetry, ResidualReport};
use crate::reduce::{reduce_demo, verify_solution, ClosedFormSolution, SolutionReport};
use crate::transform::{et_apply, fpt_apply, fpt_entry, pushforward, EtParams, PointTransformation, TransformError};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exit {
    Pass = 0,
    Fail = 1,
    Parse = 2,
    Domain = 3,
    Mismatch = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn from_pass(pass: bool) -> Exit {
        if pass {
            Exit::Pass
        } else {
            Exit::Fail
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lie-rdc", version, about = "Lie symmetries of 2D reaction-diffusion-convection equations")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// RNG seed for all sampling.
    #[arg(long, global = true, env = "LIE_RDC_SEED")]
    pub seed: Option<u64>,
    /// Sample points per residual check.
    #[arg(long, global = true, default_value_t = 100)]
    pub samples: usize,
    /// Relative tolerance of residual checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Print the JSON report on stdout.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EquationArgs {
    /// Inline equation, e.g. "D=u;K1=8*u;K2=0;R=8*u^2;params k=1".
    #[arg(short = 'e', long = "equation", conflicts_with = "file")]
    pub equation: Option<String>,
    /// File with the same fields, one per line or separated by `;`.
    #[arg(long)]
    pub file: Option<std::path::PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce to a canonical case and verify its symmetry basis.
    Classify {
        #[command(flatten)]
        eq: EquationArgs,
    },
    /// Test one generator, e.g. "D0", "Pi", "c1*R1 + c2*R2", "field(0; 1; 0; 0)".
    CheckSymmetry {
        #[command(flatten)]
        eq: EquationArgs,
        #[arg(short = 'g', long)]
        generator: String,
    },
    /// Apply an equivalence transformation or a catalog form-preserving one.
    Transform {
        #[command(flatten)]
        eq: EquationArgs,
        /// Equivalence parameters, e.g. "theta0=0.2,theta2=1.1,g1=0.5". Unset q1, q2 follow g1, g2.
        #[arg(long, conflicts_with = "fpt")]
        et: Option<String>,
        /// Catalog entry id.
        #[arg(long)]
        fpt: Option<u32>,
        /// Push the equation's listed basis through the map and test it on the image.
        #[arg(long)]
        push_generators: bool,
    },
    /// Check an explicit solution u(t, x, y).
    VerifySolution {
        #[command(flatten)]
        eq: EquationArgs,
        #[arg(short = 'u', long)]
        solution: String,
        /// Solution parameter, NAME=VALUE (repeatable).
        #[arg(long = "param")]
        params: Vec<String>,
        /// Sampling interval, NAME=LO,HI (repeatable).
        #[arg(long = "range")]
        ranges: Vec<String>,
    },
    /// The worked reduction of the porous-Fisher-Burgers equation.
    ReduceDemo,
    /// Structure constants of the span of the given generators.
    BracketTable {
        /// Generator spec (repeatable).
        #[arg(short = 'g', long = "generator", required = true)]
        generators: Vec<String>,
        /// Parameter binding for the generators, NAME=VALUE (repeatable).
        #[arg(long = "bind")]
        binds: Vec<String>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub samples: usize,
    pub sampling_box: BTreeMap<String, (f64, f64)>,
}

/// Envelope written for every command. All fields except `wall_time_s` are
/// fixed by the arguments and the seed.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    pub version: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub exit: Exit,
    pub exit_code: i32,
    pub result: Value,
    pub wall_time_s: f64,
}

/// What the binary prints.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit: Exit,
    pub report: Report,
    pub summary: String,
}

impl Outcome {
    pub fn stdout(&self, json: bool) -> Option<String> {
        json.then(|| serde_json::to_string_pretty(&self.report).expect("report serialises"))
    }
}

struct Failure {
    exit: Exit,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn parse(m: impl ToString) -> Failure {
        Failure { exit: Exit::Parse, kind: "parse", message: m.to_string() }
    }
}

fn model_failure(e: ModelError) -> Failure {
    match e {
        ModelError::NonPositiveDiffusivity { .. } | ModelError::Undefined(_) => {
            Failure { exit: Exit::Domain, kind: "domain", message: e.to_string() }
        }
        _ => Failure::parse(e),
    }
}

fn transform_failure(e: TransformError) -> Failure {
    let (exit, kind) = match e {
        TransformError::TemplateMismatch(_) => (Exit::Mismatch, "template-mismatch"),
        TransformError::DomainViolation(_) => (Exit::Domain, "domain"),
        TransformError::Parse(_) => (Exit::Parse, "parse"),
        _ => (Exit::Fail, "transform"),
    };
    Failure { exit, kind, message: e.to_string() }
}

fn classify_failure(e: ClassifyError) -> Failure {
    match e {
        ClassifyError::Model(m) => model_failure(m),
        ClassifyError::Transform(t) => transform_failure(t),
        other => Failure { exit: Exit::Fail, kind: "classify", message: other.to_string() },
    }
}

fn load_equation(a: &EquationArgs) -> Result<RdcEquation, Failure> {
    let text = match (&a.equation, &a.file) {
        (Some(e), _) => e.clone(),
        (None, Some(f)) => std::fs::read_to_string(f)
            .map_err(|e| Failure::parse(format!("{}: {e}", f.display())))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join(";"),
        (None, None) => return Err(Failure::parse("an equation is required (--equation or --file)")),
    };
    let eq = RdcEquation::from_spec(&text).map_err(model_failure)?;
    eq.check_domain(50).map_err(model_failure)?;
    Ok(eq)
}

fn key_values(items: &[String]) -> Result<BTreeMap<String, f64>, Failure> {
    let mut out = BTreeMap::new();
    for it in items.iter().flat_map(|s| s.split(',')).map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = it.split_once('=').ok_or_else(|| Failure::parse(format!("expected NAME=VALUE, got `{it}`")))?;
        let v = parse(v.trim())
            .map_err(Failure::parse)?
            .eval(&Binding::new())
            .map_err(|e| Failure::parse(format!("{k}: {e}")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn ranges(items: &[String]) -> Result<BTreeMap<String, (f64, f64)>, Failure> {
    let mut out = BTreeMap::new();
    for it in items {
        let bad = || Failure::parse(format!("expected NAME=LO,HI, got `{it}`"));
        let (k, v) = it.split_once('=').ok_or_else(bad)?;
        let (lo, hi) = v.split_once(',').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if !(lo < hi) {
            return Err(bad());
        }
        out.insert(k.trim().to_string(), (lo, hi));
    }
    Ok(out)
}

fn et_params(text: &str) -> Result<EtParams, Failure> {
    let kv = key_values(&[text.to_string()])?;
    let mut p = EtParams::identity();
    for (k, v) in &kv {
        let slot = match k.as_str() {
            "theta0" => &mut p.theta0,
            "theta1" => &mut p.theta1,
            "theta2" => &mut p.theta2,
            "theta" => &mut p.theta,
            "m0" => &mut p.m0,
            "m1" => &mut p.m1,
            "m2" => &mut p.m2,
            "g1" => &mut p.g1,
            "g2" => &mut p.g2,
            "m" => &mut p.m,
            "q1" => &mut p.q1,
            "q2" => &mut p.q2,
            other => return Err(Failure::parse(format!("unknown transformation parameter `{other}`"))),
        };
        *slot = *v;
    }
    if !kv.contains_key("q1") {
        p.q1 = p.g1;
    }
    if !kv.contains_key("q2") {
        p.q2 = p.g2;
    }
    if p.as_array().iter().any(|v| !v.is_finite()) {
        return Err(Failure::parse("transformation parameters must be finite"));
    }
    Ok(p)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serialises")
}

fn sci(v: f64) -> String {
    format!("{v:.2e}")
}

fn residual_line(r: &ResidualReport) -> String {
    format!("{}: {} (max residual {})", r.label, if r.pass { "pass" } else { "FAIL" }, sci(r.max_residual))
}

fn solution_line(r: &SolutionReport) -> String {
    format!(
        "{}: {} (residual {}, finite differences {})",
        r.name,
        if r.pass { "pass" } else { "FAIL" },
        sci(r.symbolic.max_residual),
        sci(r.finite_difference)
    )
}

fn classify_summary(r: &ClassificationReport) -> String {
    let mut s = String::new();
    match r.case {
        Some(c) => {
            let _ = write!(s, "Case {c}");
            if let Some(v) = r.via_table2 {
                let _ = write!(s, " (through intermediate case {v})");
            }
        }
        None => s.push_str("principal algebra only"),
    }
    s.push('\n');
    if !r.params.is_empty() {
        let ps: Vec<String> = r.params.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        let _ = writeln!(s, "parameters: {}", ps.join(", "));
    }
    let _ = writeln!(s, "canonical: {}", r.canonical.to_spec());
    let dim = r.dim().map_or("infinite".to_string(), |d| d.to_string());
    let _ = writeln!(s, "basis (dimension {dim}):");
    for b in &r.basis {
        let _ = writeln!(s, "  {} {}", if b.pass { "ok  " } else { "FAIL" }, b.name);
    }
    let _ = writeln!(s, "verified: {}, chain verified: {}", r.verified, r.chain_verified);
    for n in &r.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

type Done = (Exit, Value, String);

fn cmd_classify(eq: &EquationArgs, s: &Sampling) -> Result<Done, Failure> {
    let eq = load_equation(eq)?;
    let r = classify(&eq, s).map_err(classify_failure)?;
    Ok((Exit::Pass, to_value(&r), classify_summary(&r)))
}

fn cmd_check_symmetry(eq: &EquationArgs, generator: &str, s: &Sampling) -> Result<Done, Failure> {
    let eq = load_equation(eq)?;
    let g = generator_from_spec(generator, &eq.params).map_err(Failure::parse)?.simplify();
    let report = is_symmetry(&eq, &g, s).compact();
    let determining: Vec<ResidualReport> = determining_residuals(&eq, &g, s).into_iter().map(|r| r.compact()).collect();
    let mut summary = format!("{} on {}\n{}\n", g.display(), eq.to_spec(), residual_line(&report));
    if let Some(w) = &report.witness {
        let _ = writeln!(summary, "witness: {}", serde_json::to_string(w).unwrap_or_default());
    }
    for d in determining.iter().filter(|d| !d.pass) {
        let _ = writeln!(summary, "  {}", residual_line(d));
    }
    let out = json!({ "generator": g, "report": report, "determining": determining });
    Ok((Exit::from_pass(report.pass), out, summary))
}

/// Push the listed basis of `src` through `map` and test each image on `dst`.
fn push_basis(src: &RdcEquation, dst: &RdcEquation, map: &PointTransformation, prefer: Option<u32>, s: &Sampling) -> (Value, bool, String) {
    let Some(found) = literal_basis(src, prefer, s) else {
        return (json!({ "error": "the equation instantiates no listed row" }), false, "no listed basis to push\n".into());
    };
    // Sample image times of the source box, where the inverse map is defined.
    let (t0, t1) = s.ranges.get("t").copied().unwrap_or((-1.0, 1.0));
    let img = |t: f64| map.forward(&[t, 0.0, 0.0, 1.0]).map(|q| q[0]);
    let s = match img(t0).zip(img(t1)) {
        Some((a, b)) if a.is_finite() && b.is_finite() && a != b => s.clone().range("t", a.min(b), a.max(b)),
        _ => s.clone(),
    };
    let mut checks = Vec::new();
    let mut summary = format!("pushed basis of table {} case {}:\n", found.table, found.case);
    let mut pass = true;
    for el in &found.basis {
        for g in el.instances() {
            match pushforward(g, map) {
                Ok(h) => {
                    let h = h.simplify();
                    let r = is_symmetry(dst, &h, &s).compact();
                    pass &= r.pass;
                    let _ = writeln!(summary, "  {} -> {}: {}", g.name, h.display(), if r.pass { "pass" } else { "FAIL" });
                    checks.push(json!({ "source": g.name, "pushed": h.display(), "report": r }));
                }
                Err(e) => {
                    pass = false;
                    checks.push(json!({ "source": g.name, "error": e.to_string() }));
                }
            }
        }
    }
    let v = json!({ "table": found.table, "case": found.case, "params": found.params, "checks": checks, "pass": pass });
    (v, pass, summary)
}

fn cmd_transform(eq: &EquationArgs, et: &Option<String>, fpt: Option<u32>, push: bool, s: &Sampling) -> Result<Done, Failure> {
    let src = load_equation(eq)?;
    let (target, map, mut out, mut summary, mut pass) = match (et, fpt) {
        (Some(text), None) => {
            let p = et_params(text)?;
            let target = et_apply(&src, &p);
            let out = json!({ "et": p, "genuine": p.is_genuine() });
            let summary = format!("equivalence transformation{}\n", if p.is_genuine() { "" } else { " (coefficient map only)" });
            (target, p.point_transformation(), out, summary, true)
        }
        (None, Some(id)) => {
            let entry = fpt_entry(id).ok_or_else(|| Failure::parse(format!("no catalog entry {id} (1..9)")))?;
            let app = fpt_apply(&src, entry, s).map_err(transform_failure)?;
            let out = json!({
                "fpt": id,
                "status": entry.status,
                "params": app.params,
                "fpt_report": app.report,
            });
            let summary = format!("form-preserving transformation {id}: verified {}\n", app.report.pass);
            (app.target, app.map, out, summary, app.report.pass)
        }
        _ => return Err(Failure::parse("give exactly one of --et or --fpt")),
    };
    let _ = writeln!(summary, "{}\n  -> {}", src.to_spec(), target.to_spec());
    let obj = out.as_object_mut().expect("object");
    obj.insert("source".into(), to_value(&src));
    obj.insert("equation".into(), Value::String(target.to_spec()));
    obj.insert("target".into(), to_value(&target));
    if push {
        let (v, ok, text) = push_basis(&src, &target, &map, fpt, s);
        obj.insert("pushed".into(), v);
        summary.push_str(&text);
        pass &= ok;
    }
    Ok((Exit::from_pass(pass), out, summary))
}

fn cmd_verify_solution(eq: &EquationArgs, solution: &str, params: &[String], rs: &[String], s: &Sampling) -> Result<Done, Failure> {
    let eq = load_equation(eq)?;
    let u = parse(solution).map_err(Failure::parse)?;
    let mut sol = ClosedFormSolution::new("u", u, eq.clone());
    sol.parameters = key_values(params)?;
    sol.domain.extend(ranges(rs)?);
    let r = verify_solution(&eq, &sol, s);
    let summary = format!("{}\n", solution_line(&r));
    Ok((Exit::from_pass(r.pass), json!({ "solution": sol, "report": r }), summary))
}

fn cmd_reduce_demo(s: &Sampling) -> Result<Done, Failure> {
    let r = reduce_demo(s).map_err(|e| Failure { exit: Exit::Fail, kind: "reduce", message: e.to_string() })?;
    let mut t = String::new();
    let red = &r.reduction;
    let _ = writeln!(t, "ansatz: {}", red.ansatz.display);
    let _ = writeln!(t, "reduced: {} with C = {} (expected {})", red.reduced, red.coefficient, red.expected_coefficient);
    let _ = writeln!(t, "consistency {}; {}", sci(red.consistency), residual_line(&red.operator_check));
    for b in &r.boussinesq {
        let _ = writeln!(t, "reduced-equation solution {}", residual_line(b));
    }
    for l in r.lifted.iter().chain(&r.host).chain(&r.printed) {
        let _ = writeln!(t, "{}", solution_line(l));
    }
    for c in &r.comparisons {
        let _ = writeln!(t, "{}: printed vs regenerated, max relative difference {} ({})", c.name, sci(c.max_rel_diff), if c.agree { "agree" } else { "DIFFER" });
    }
    let _ = writeln!(t, "steady-state gap {}; overall {}", sci(r.steady_state_gap), if r.pass { "pass" } else { "FAIL" });
    Ok((Exit::from_pass(r.pass), to_value(&r), t))
}

fn cmd_bracket_table(generators: &[String], binds: &[String], s: &Sampling) -> Result<Done, Failure> {
    let b = key_values(binds)?;
    let basis = generators
        .iter()
        .map(|g| generator_from_spec(g, &b).map(|g| g.simplify()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::parse)?;
    let table = structure_constants(&basis, s);
    let pass = table.closed && table.jacobi_residual < 1e-10;
    let mut t = table.lines().join("\n");
    let _ = write!(t, "\nclosed: {}, dimension {}, Jacobi residual {}\n", table.closed, basis.len(), sci(table.jacobi_residual));
    Ok((Exit::from_pass(pass), json!({ "dimension": basis.len(), "table": table }), t))
}

/// Run a parsed command line.
pub fn execute(cli: &Cli, argv: Vec<String>) -> Outcome {
    let start = Instant::now();
    let c = &cli.common;
    let seed = c.seed.unwrap_or(DEFAULT_SEED);
    let s = Sampling::standard().with_seed(seed).with_samples(c.samples).with_tol(1e-10, c.tol);
    let done = match &cli.command {
        Command::Classify { eq } => cmd_classify(eq, &s),
        Command::CheckSymmetry { eq, generator } => cmd_check_symmetry(eq, generator, &s),
        Command::Transform { eq, et, fpt, push_generators } => cmd_transform(eq, et, *fpt, *push_generators, &s),
        Command::VerifySolution { eq, solution, params, ranges } => cmd_verify_solution(eq, solution, params, ranges, &s),
        Command::ReduceDemo => cmd_reduce_demo(&s),
        Command::BracketTable { generators, binds } => cmd_bracket_table(generators, binds, &s),
    };
    let (exit, result, summary) = match done {
        Ok(d) => d,
        Err(f) => (f.exit, json!({ "error": f.kind, "message": f.message }), format!("error ({}): {}\n", f.kind, f.message)),
    };
    let report = Report {
        command: argv,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        tolerances: Tolerances { rtol: s.rtol, atol: s.atol, samples: s.samples, sampling_box: s.ranges.clone() },
        exit,
        exit_code: exit.code(),
        result,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Outcome { exit, report, summary }
}

/// Parse and run. Argument errors go through clap (exit 2, or 0 for `--help`).
pub fn main_with_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let out = execute(&cli, argv);
    eprint!("{}", out.summary);
    if let Some(j) = out.stdout(cli.common.json) {
        println!("{j}");
    }
    out.exit.code()
}
