use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::generator::{commutator, Generator, GeneratorFamily};
use crate::expr::num::snap_rational;
use crate::expr::{Binding, Expr, Sampling};

/// Ordered basis, optional infinite families, and the bracket table once computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieAlgebra {
    pub basis: Vec<Generator>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub families: Vec<GeneratorFamily>,
    #[serde(default)]
    pub structure_constants: Option<StructureTable>,
}

impl LieAlgebra {
    pub fn new(basis: Vec<Generator>) -> LieAlgebra {
        LieAlgebra { basis, families: Vec::new(), structure_constants: None }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Compute and store the bracket table.
    pub fn with_structure(mut self, s: &Sampling) -> LieAlgebra {
        self.structure_constants = Some(structure_constants(&self.basis, s));
        self
    }
}

/// `c[i][j][k]` with `[X_i, X_j] = Σ_k c[i][j][k] X_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureTable {
    pub names: Vec<String>,
    pub constants: Vec<Vec<Vec<f64>>>,
    pub closed: bool,
    /// Pairs whose bracket is not in the span.
    pub outside_span: Vec<(usize, usize)>,
    pub max_antisymmetry_error: f64,
    pub jacobi_residual: f64,
}

impl StructureTable {
    /// Human-readable line per nonzero bracket.
    pub fn lines(&self) -> Vec<String> {
        let n = self.names.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.outside_span.contains(&(i, j)) {
                    out.push(format!("[{}, {}] = (outside span)", self.names[i], self.names[j]));
                    continue;
                }
                let terms: Vec<String> = (0..n)
                    .filter(|&k| self.constants[i][j][k] != 0.0)
                    .map(|k| format!("{} {}", fmt_coef(self.constants[i][j][k]), self.names[k]))
                    .collect();
                if !terms.is_empty() {
                    out.push(format!("[{}, {}] = {}", self.names[i], self.names[j], terms.join(" + ")));
                }
            }
        }
        out
    }
}

fn fmt_coef(c: f64) -> String {
    match snap_rational(c, 12, 1e-12) {
        Some(r) if r.is_integer() => r.numer().to_string(),
        Some(r) => format!("({}/{})", r.numer(), r.denom()),
        None => format!("{c}"),
    }
}

fn base_points(s: &Sampling, n: usize) -> Vec<Binding> {
    let names: BTreeSet<String> = ["t", "x", "y", "u"].iter().map(|s| s.to_string()).collect();
    s.clone().with_samples(n).points(&names)
}

fn eval_coeffs(g: &Generator, p: &Binding) -> Option<[f64; 4]> {
    let mut out = [0.0; 4];
    for (o, e) in out.iter_mut().zip(g.coeffs()) {
        *o = e.eval(p).ok()?;
    }
    Some(out)
}

/// Solve `bracket = Σ c_k basis_k` by least squares at sampled points, then confirm
/// the fitted combination coefficient-wise on the full sampling box.
fn express_in_basis(bracket: &Generator, basis: &[Generator], s: &Sampling) -> Option<Vec<f64>> {
    let n = basis.len();
    if bracket.is_zero() {
        return Some(vec![0.0; n]);
    }
    let npts = 4.max(n);
    let pts = base_points(s, npts);
    let mut a = DMatrix::<f64>::zeros(4 * npts, n);
    let mut rhs = DVector::<f64>::zeros(4 * npts);
    for (pi, p) in pts.iter().enumerate() {
        let bv = eval_coeffs(bracket, p)?;
        for c in 0..4 {
            rhs[4 * pi + c] = bv[c];
        }
        for (k, g) in basis.iter().enumerate() {
            let gv = eval_coeffs(g, p)?;
            for c in 0..4 {
                a[(4 * pi + c, k)] = gv[c];
            }
        }
    }
    let sol = a.svd(true, true).solve(&rhs, 1e-12).ok()?;
    let coeffs: Vec<f64> = sol
        .iter()
        .map(|&v| match snap_rational(v, 12, 1e-8) {
            Some(r) => *r.numer() as f64 / *r.denom() as f64,
            None => v,
        })
        .collect();
    let terms: Vec<(Expr, &Generator)> = coeffs
        .iter()
        .zip(basis)
        .filter(|(c, _)| **c != 0.0)
        .map(|(c, g)| (Expr::Num(crate::expr::num::literal_for(*c)), g))
        .collect();
    let fitted = Generator::combination("fit", &terms);
    let check = s.clone().with_tol(1e-10, 1e-9);
    bracket.equivalent(&fitted, &check).then_some(coeffs)
}

/// Bracket table of a finite basis. Non-closure is reported, not an error.
pub fn structure_constants(basis: &[Generator], s: &Sampling) -> StructureTable {
    let n = basis.len();
    let mut c = vec![vec![vec![0.0; n]; n]; n];
    let mut outside = Vec::new();
    let mut brackets: Vec<Vec<Option<Generator>>> = vec![vec![None; n]; n];
    let mut anti: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let b = commutator(&basis[i], &basis[j]);
            if j > i {
                match express_in_basis(&b, basis, s) {
                    Some(v) => c[i][j] = v,
                    None => outside.push((i, j)),
                }
            }
            brackets[i][j] = Some(b);
        }
    }
    for i in 0..n {
        for j in 0..i {
            c[i][j] = c[j][i].iter().map(|v| -v).collect();
        }
    }
    // Antisymmetry check on the raw symbolic brackets.
    let pts = base_points(s, 20);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (brackets[i][j].as_ref().unwrap(), brackets[j][i].as_ref().unwrap());
            for p in &pts {
                if let (Some(x), Some(y)) = (eval_coeffs(a, p), eval_coeffs(b, p)) {
                    for k in 0..4 {
                        anti = anti.max((x[k] + y[k]).abs());
                    }
                }
            }
        }
    }
    let jac = jacobi_residual(basis, s);
    StructureTable {
        names: basis.iter().map(|g| g.name.clone()).collect(),
        constants: c,
        closed: outside.is_empty(),
        outside_span: outside,
        max_antisymmetry_error: anti,
        jacobi_residual: jac,
    }
}

/// Largest coefficient of `[[a,b],c] + [[b,c],a] + [[c,a],b]` over basis triples and points.
pub fn jacobi_residual(basis: &[Generator], s: &Sampling) -> f64 {
    let n = basis.len();
    let pts = base_points(s, 20);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (&basis[i], &basis[j], &basis[k]);
                let parts = [
                    commutator(&commutator(a, b), c),
                    commutator(&commutator(b, c), a),
                    commutator(&commutator(c, a), b),
                ];
                for p in &pts {
                    let vals: Vec<[f64; 4]> = parts.iter().filter_map(|g| eval_coeffs(g, p)).collect();
                    if vals.len() < 3 {
                        continue;
                    }
                    for m in 0..4 {
                        worst = worst.max((vals[0][m] + vals[1][m] + vals[2][m]).abs());
                    }
                }
            }
        }
    }
    worst
}
