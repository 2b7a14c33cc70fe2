//! Problem files: a small versioned TOML schema describing one problem
//! instance, either as a dense payload or as a seeded generator. Custom
//! user functions are deliberately not expressible here; those go through
//! the library API.
//!
//! Schema (format = 1):
//!
//! ```toml
//! format = 1
//! kind = "quadratic"      # quadratic | structured-sigmoid |
//!                         # linear-feasibility | scalar-polynomial
//! n = 2
//! m = 1
//! x0 = [0.0, 0.0]         # optional
//!
//! [payload]               # exactly one of payload / generator
//! a = [[[1.0]]]           # quadratic: m symmetric n x n matrices
//! b = [[1.0]]             # quadratic: m rows of length n
//! y = [0.105]
//!
//! [generator]
//! seed = 7
//! n = 60
//! m = 21
//! distribution = "standard-normal"
//!
//! [constants]             # optional certified constants
//! mu = 1.0
//! l = 1.0
//! ```
//!
//! Unknown keys anywhere are rejected, and the diagnostic names the
//! offending field.

use crate::linalg::Matrix;
use crate::problems::{
    linear_feasibility_transform, QuadraticProblem, ScalarProblem, StructuredProblem,
};
use crate::rng::Rng;
use crate::solvers::ProblemDefinition;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProbFileError {
    #[error("cannot read problem file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed problem file: {0}")]
    Parse(String),
    #[error("invalid problem file: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Quadratic,
    StructuredSigmoid,
    LinearFeasibility,
    ScalarPolynomial,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Quadratic => "quadratic",
            Kind::StructuredSigmoid => "structured-sigmoid",
            Kind::LinearFeasibility => "linear-feasibility",
            Kind::ScalarPolynomial => "scalar-polynomial",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub format: u32,
    pub kind: Kind,
    pub n: usize,
    pub m: usize,
    pub x0: Option<Vec<f64>>,
    pub payload: Option<Payload>,
    pub generator: Option<Generator>,
    pub constants: Option<FileConstants>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Payload {
    /// Quadratic: the `m` matrices `A_i`, each `n x n`.
    pub a: Option<Vec<Vec<Vec<f64>>>>,
    /// Quadratic: the `m` linear rows `b_i`.
    pub b: Option<Vec<Vec<f64>>>,
    /// Quadratic / structured: the target vector `y`.
    pub y: Option<Vec<f64>>,
    /// Structured: the `m x n` matrix `C`.
    pub c: Option<Vec<Vec<f64>>>,
    /// Structured: the row offsets.
    pub offsets: Option<Vec<f64>>,
    /// Linear feasibility: the `m x n` constraint matrix.
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Linear feasibility: the right-hand side.
    pub rhs: Option<Vec<f64>>,
    /// Scalar polynomial: each term is `[coefficient, p_1, ..., p_n]`
    /// with nonnegative integer exponents.
    pub terms: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub distribution: String,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConstants {
    pub mu: Option<f64>,
    pub mu0: Option<f64>,
    pub l: Option<f64>,
    pub rho: Option<f64>,
    pub beta0: Option<f64>,
    pub q: Option<f64>,
}

/// A parsed and validated problem, ready for the solvers.
#[derive(Debug)]
pub struct LoadedProblem {
    pub kind: Kind,
    pub n: usize,
    pub m: usize,
    pub problem: ProblemDefinition,
    pub x0: Vec<f64>,
    pub constants: FileConstants,
    /// Retained for certification (Jacobian-at-origin analysis).
    pub quadratic: Option<QuadraticProblem>,
    pub structured: Option<StructuredProblem>,
    pub y: Option<Vec<f64>>,
}

pub fn load_problem_str(text: &str) -> Result<LoadedProblem, ProbFileError> {
    let file: ProblemFile =
        toml::from_str(text).map_err(|e| ProbFileError::Parse(e.message().to_string()))?;
    realize(file)
}

pub fn load_problem(path: &std::path::Path) -> Result<LoadedProblem, ProbFileError> {
    load_problem_str(&std::fs::read_to_string(path)?)
}

fn invalid(msg: impl Into<String>) -> ProbFileError {
    ProbFileError::Invalid(msg.into())
}

pub fn realize(file: ProblemFile) -> Result<LoadedProblem, ProbFileError> {
    if file.format != 1 {
        return Err(invalid(format!("field 'format': expected 1, got {}", file.format)));
    }
    if file.m > file.n {
        return Err(invalid(format!(
            "fields 'n'/'m': need m <= n, got m={} n={}",
            file.m, file.n
        )));
    }
    match (&file.payload, &file.generator) {
        (Some(_), Some(_)) => {
            return Err(invalid("fields 'payload' and 'generator' are mutually exclusive"))
        }
        (None, None) => return Err(invalid("one of 'payload' or 'generator' is required")),
        _ => {}
    }
    if let Some(g) = &file.generator {
        if g.distribution != "standard-normal" {
            return Err(invalid(format!(
                "field 'generator.distribution': only \"standard-normal\" is supported, got \"{}\"",
                g.distribution
            )));
        }
        if g.n != file.n || g.m != file.m {
            return Err(invalid(
                "fields 'generator.n'/'generator.m' must match the top-level dimensions",
            ));
        }
    }
    if let Some(x0) = &file.x0 {
        if x0.len() != file.n {
            return Err(invalid(format!(
                "field 'x0': expected length {}, got {}",
                file.n,
                x0.len()
            )));
        }
        if !crate::linalg::all_finite(x0) {
            return Err(invalid("field 'x0': entries must be finite"));
        }
    }
    let constants = file.constants.unwrap_or_default();
    for (name, v) in [
        ("mu", constants.mu),
        ("mu0", constants.mu0),
        ("l", constants.l),
        ("rho", constants.rho),
        ("beta0", constants.beta0),
        ("q", constants.q),
    ] {
        if let Some(v) = v {
            if !(v.is_finite() && v > 0.0) && !(name == "rho" && v == f64::INFINITY) {
                return Err(invalid(format!(
                    "field 'constants.{name}': must be positive and finite"
                )));
            }
        }
    }
    if let Some(q) = constants.q {
        if q >= 1.0 {
            return Err(invalid("field 'constants.q': must lie in (0, 1)"));
        }
    }

    match file.kind {
        Kind::Quadratic => realize_quadratic(file, constants),
        Kind::StructuredSigmoid => realize_structured(file, constants),
        Kind::LinearFeasibility => realize_linear_feasibility(file, constants),
        Kind::ScalarPolynomial => realize_scalar_polynomial(file, constants),
    }
}

fn to_matrix(rows: &[Vec<f64>], m: usize, n: usize, field: &str) -> Result<Matrix, ProbFileError> {
    if rows.len() != m || rows.iter().any(|r| r.len() != n) {
        return Err(invalid(format!("field '{field}': expected {m} rows of length {n}")));
    }
    Matrix::from_rows(rows).map_err(|e| invalid(format!("field '{field}': {e}")))
}

fn check_vec(v: &[f64], len: usize, field: &str) -> Result<(), ProbFileError> {
    if v.len() != len {
        return Err(invalid(format!(
            "field '{field}': expected length {len}, got {}",
            v.len()
        )));
    }
    if !crate::linalg::all_finite(v) {
        return Err(invalid(format!("field '{field}': entries must be finite")));
    }
    Ok(())
}

/// Generated-quadratic draw order: for each i the dense `n x n` Gaussian
/// block of `A_i` (symmetrized afterwards), then all rows `b_i`, then `y`.
fn realize_quadratic(
    file: ProblemFile,
    constants: FileConstants,
) -> Result<LoadedProblem, ProbFileError> {
    let (n, m) = (file.n, file.m);
    let quad = if let Some(p) = &file.payload {
        let a_raw = p.a.as_ref().ok_or_else(|| invalid("field 'payload.a' is required for kind quadratic"))?;
        let b = p.b.clone().ok_or_else(|| invalid("field 'payload.b' is required for kind quadratic"))?;
        let y = p.y.clone().ok_or_else(|| invalid("field 'payload.y' is required for kind quadratic"))?;
        for key in ["c", "offsets", "matrix", "rhs", "terms"] {
            if payload_has(p, key) {
                return Err(invalid(format!("field 'payload.{key}' is not valid for kind quadratic")));
            }
        }
        if a_raw.len() != m {
            return Err(invalid(format!("field 'payload.a': expected {m} matrices")));
        }
        let a: Vec<Matrix> = a_raw
            .iter()
            .map(|mat| to_matrix(mat, n, n, "payload.a"))
            .collect::<Result<_, _>>()?;
        if b.len() != m {
            return Err(invalid(format!("field 'payload.b': expected {m} rows")));
        }
        for row in &b {
            check_vec(row, n, "payload.b")?;
        }
        check_vec(&y, m, "payload.y")?;
        QuadraticProblem::new(a, b, y).map_err(|e| invalid(e.to_string()))?
    } else {
        let g = file.generator.as_ref().unwrap();
        let mut rng = Rng::seed_from_u64(g.seed);
        let a: Vec<Matrix> = (0..m)
            .map(|_| {
                let raw = Matrix::from_fn(n, n, |_, _| rng.standard_normal());
                Matrix::from_fn(n, n, |i, j| 0.5 * (raw[(i, j)] + raw[(j, i)]))
            })
            .collect();
        let b: Vec<Vec<f64>> = (0..m).map(|_| rng.normal_vec(n)).collect();
        let y = rng.normal_vec(m);
        QuadraticProblem::new(a, b, y).map_err(|e| invalid(e.to_string()))?
    };
    let x0 = file.x0.unwrap_or_else(|| vec![0.0; n]);
    Ok(LoadedProblem {
        kind: Kind::Quadratic,
        n,
        m,
        problem: quad.to_problem(),
        x0,
        constants,
        y: Some(quad.y.clone()),
        structured: None,
        quadratic: Some(quad),
    })
}

/// Generated-structured draw order matches the benchmark: `C` row-major,
/// then the offsets, then `y`.
fn realize_structured(
    file: ProblemFile,
    constants: FileConstants,
) -> Result<LoadedProblem, ProbFileError> {
    let (n, m) = (file.n, file.m);
    let s = if let Some(p) = &file.payload {
        let c_raw = p.c.as_ref().ok_or_else(|| invalid("field 'payload.c' is required for kind structured-sigmoid"))?;
        let offsets = p.offsets.clone().ok_or_else(|| invalid("field 'payload.offsets' is required for kind structured-sigmoid"))?;
        let y = p.y.clone().ok_or_else(|| invalid("field 'payload.y' is required for kind structured-sigmoid"))?;
        for key in ["a", "b", "matrix", "rhs", "terms"] {
            if payload_has(p, key) {
                return Err(invalid(format!(
                    "field 'payload.{key}' is not valid for kind structured-sigmoid"
                )));
            }
        }
        let c = to_matrix(c_raw, m, n, "payload.c")?;
        check_vec(&offsets, m, "payload.offsets")?;
        check_vec(&y, m, "payload.y")?;
        StructuredProblem::sigmoid(c, offsets, y).map_err(|e| invalid(e.to_string()))?
    } else {
        let g = file.generator.as_ref().unwrap();
        let mut rng = Rng::seed_from_u64(g.seed);
        let c = Matrix::from_fn(m, n, |_, _| rng.standard_normal());
        let offsets = rng.normal_vec(m);
        let y = rng.normal_vec(m);
        StructuredProblem::sigmoid(c, offsets, y).map_err(|e| invalid(e.to_string()))?
    };
    let x0 = file.x0.unwrap_or_else(|| vec![0.0; n]);
    Ok(LoadedProblem {
        kind: Kind::StructuredSigmoid,
        n,
        m,
        problem: s.to_problem(),
        x0,
        constants,
        y: Some(s.y.clone()),
        quadratic: None,
        structured: Some(s),
    })
}

/// Generated-feasibility draw order: `A` row-major, then a latent Gaussian
/// vector `xi`; the right-hand side is `A (xi^2)` so the instance is
/// feasible by construction.
fn realize_linear_feasibility(
    file: ProblemFile,
    constants: FileConstants,
) -> Result<LoadedProblem, ProbFileError> {
    let (n, m) = (file.n, file.m);
    let (a, rhs) = if let Some(p) = &file.payload {
        let matrix = p.matrix.as_ref().ok_or_else(|| invalid("field 'payload.matrix' is required for kind linear-feasibility"))?;
        let rhs = p.rhs.clone().ok_or_else(|| invalid("field 'payload.rhs' is required for kind linear-feasibility"))?;
        for key in ["a", "b", "c", "offsets", "y", "terms"] {
            if payload_has(p, key) {
                return Err(invalid(format!(
                    "field 'payload.{key}' is not valid for kind linear-feasibility"
                )));
            }
        }
        let a = to_matrix(matrix, m, n, "payload.matrix")?;
        check_vec(&rhs, m, "payload.rhs")?;
        (a, rhs)
    } else {
        let g = file.generator.as_ref().unwrap();
        let mut rng = Rng::seed_from_u64(g.seed);
        let a = Matrix::from_fn(m, n, |_, _| rng.standard_normal());
        let xi = rng.normal_vec(n);
        let sq: Vec<f64> = xi.iter().map(|v| v * v).collect();
        let rhs = a.matvec(&sq);
        (a, rhs)
    };
    // z0 = 1 keeps the Jacobian 2 A diag(z) full rank generically; z0 = 0
    // would make it identically zero.
    let x0 = file.x0.unwrap_or_else(|| vec![1.0; n]);
    let y = Some(rhs.clone());
    Ok(LoadedProblem {
        kind: Kind::LinearFeasibility,
        n,
        m,
        problem: linear_feasibility_transform(a, rhs),
        x0,
        constants,
        quadratic: None,
        structured: None,
        y,
    })
}

fn realize_scalar_polynomial(
    file: ProblemFile,
    constants: FileConstants,
) -> Result<LoadedProblem, ProbFileError> {
    let n = file.n;
    if file.m != 1 {
        return Err(invalid("field 'm': kind scalar-polynomial requires m = 1"));
    }
    let p = file
        .payload
        .as_ref()
        .ok_or_else(|| invalid("field 'payload' is required for kind scalar-polynomial (no generator form)"))?;
    let terms_raw = p
        .terms
        .as_ref()
        .ok_or_else(|| invalid("field 'payload.terms' is required for kind scalar-polynomial"))?;
    for key in ["a", "b", "c", "offsets", "y", "matrix", "rhs"] {
        if payload_has(p, key) {
            return Err(invalid(format!(
                "field 'payload.{key}' is not valid for kind scalar-polynomial"
            )));
        }
    }
    let mut terms: Vec<(f64, Vec<u32>)> = Vec::with_capacity(terms_raw.len());
    for t in terms_raw {
        if t.len() != n + 1 {
            return Err(invalid(format!(
                "field 'payload.terms': each term needs 1 coefficient + {n} exponents"
            )));
        }
        let coef = t[0];
        if !coef.is_finite() {
            return Err(invalid("field 'payload.terms': coefficients must be finite"));
        }
        let powers: Vec<u32> = t[1..]
            .iter()
            .map(|&e| {
                if e >= 0.0 && e.fract() == 0.0 && e <= u32::MAX as f64 {
                    Ok(e as u32)
                } else {
                    Err(invalid("field 'payload.terms': exponents must be nonnegative integers"))
                }
            })
            .collect::<Result<_, _>>()?;
        terms.push((coef, powers));
    }
    let sp = polynomial_scalar_problem(n, terms, constants.l.unwrap_or(f64::NAN));
    let x0 = file.x0.unwrap_or_else(|| vec![0.0; n]);
    Ok(LoadedProblem {
        kind: Kind::ScalarPolynomial,
        n,
        m: 1,
        problem: sp.to_problem(),
        x0,
        constants,
        quadratic: None,
        structured: None,
        y: None,
    })
}

fn payload_has(p: &Payload, key: &str) -> bool {
    match key {
        "a" => p.a.is_some(),
        "b" => p.b.is_some(),
        "y" => p.y.is_some(),
        "c" => p.c.is_some(),
        "offsets" => p.offsets.is_some(),
        "matrix" => p.matrix.is_some(),
        "rhs" => p.rhs.is_some(),
        "terms" => p.terms.is_some(),
        _ => false,
    }
}

/// Builds a `ScalarProblem` from polynomial terms `(coef, powers)`.
pub fn polynomial_scalar_problem(n: usize, terms: Vec<(f64, Vec<u32>)>, lipschitz: f64) -> ScalarProblem {
    let terms_f = terms.clone();
    let terms_g = terms;
    ScalarProblem::new(
        n,
        move |x| {
            terms_f
                .iter()
                .map(|(c, pw)| c * pw.iter().zip(x).map(|(&p, &xi)| xi.powi(p as i32)).product::<f64>())
                .sum()
        },
        move |x| {
            let mut g = vec![0.0; n];
            for (c, pw) in &terms_g {
                for j in 0..n {
                    if pw[j] == 0 {
                        continue;
                    }
                    let mut d = c * pw[j] as f64 * x[j].powi(pw[j] as i32 - 1);
                    for (k, (&p, &xk)) in pw.iter().zip(x).enumerate() {
                        if k != j {
                            d *= xk.powi(p as i32);
                        }
                    }
                    g[j] += d;
                }
            }
            g
        },
        lipschitz,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{solve_basic, SolveStatus, SolverConfig};

    const QUAD_1D: &str = r#"
format = 1
kind = "quadratic"
n = 1
m = 1

[payload]
a = [[[1.0]]]
b = [[1.0]]
y = [0.105]

[constants]
mu = 1.0
l = 1.0
"#;

    #[test]
    fn quadratic_payload_round_trip() {
        let lp = load_problem_str(QUAD_1D).unwrap();
        assert_eq!(lp.kind, Kind::Quadratic);
        assert_eq!(lp.problem.eval(&[0.0]), vec![-0.105]);
        assert_eq!(lp.constants.mu, Some(1.0));
        let out = solve_basic(&lp.problem, &lp.x0, 1.0, 1.0, &SolverConfig::default());
        assert_eq!(out.status, SolveStatus::Converged);
        assert!((out.x[0] - 0.1).abs() < 1e-9);
    }

    #[test]
    fn unknown_key_rejected_with_field_name() {
        let text = QUAD_1D.replace("[constants]", "bogus = 3\n[constants]");
        let err = load_problem_str(&text).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn missing_format_rejected() {
        let text = QUAD_1D.replace("format = 1\n", "");
        assert!(load_problem_str(&text).is_err());
    }

    #[test]
    fn wrong_format_version_rejected() {
        let text = QUAD_1D.replace("format = 1", "format = 2");
        let err = load_problem_str(&text).unwrap_err();
        assert!(err.to_string().contains("format"), "{err}");
    }

    #[test]
    fn payload_dimension_mismatch_names_field() {
        let text = QUAD_1D.replace("y = [0.105]", "y = [0.105, 1.0]");
        let err = load_problem_str(&text).unwrap_err();
        assert!(err.to_string().contains("payload.y"), "{err}");
    }

    #[test]
    fn generator_is_deterministic() {
        let text = r#"
format = 1
kind = "structured-sigmoid"
n = 6
m = 3

[generator]
seed = 9
n = 6
m = 3
distribution = "standard-normal"
"#;
        let a = load_problem_str(text).unwrap();
        let b = load_problem_str(text).unwrap();
        let x = [0.3; 6];
        assert_eq!(a.problem.eval(&x), b.problem.eval(&x));
    }

    #[test]
    fn generator_bad_distribution_rejected() {
        let text = r#"
format = 1
kind = "quadratic"
n = 2
m = 1

[generator]
seed = 1
n = 2
m = 1
distribution = "uniform"
"#;
        let err = load_problem_str(text).unwrap_err();
        assert!(err.to_string().contains("distribution"), "{err}");
    }

    #[test]
    fn payload_and_generator_conflict() {
        let text = format!(
            "{QUAD_1D}\n[generator]\nseed = 1\nn = 1\nm = 1\ndistribution = \"standard-normal\"\n"
        );
        assert!(load_problem_str(&text).is_err());
    }

    #[test]
    fn linear_feasibility_generator_is_feasible() {
        let text = r#"
format = 1
kind = "linear-feasibility"
n = 5
m = 2

[generator]
seed = 4
n = 5
m = 2
distribution = "standard-normal"
"#;
        let lp = load_problem_str(text).unwrap();
        assert_eq!(lp.x0, vec![1.0; 5]);
        // Feasibility by construction: the latent xi^2 point is a root.
        let mut rng = Rng::seed_from_u64(4);
        for _ in 0..10 {
            rng.standard_normal();
        }
        let xi = rng.normal_vec(5);
        let r = lp.problem.eval(&xi);
        assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
    }

    #[test]
    fn scalar_polynomial_eval_and_gradient() {
        let text = r#"
format = 1
kind = "scalar-polynomial"
n = 2
m = 1
x0 = [1.0, 2.0]

[payload]
terms = [[2.0, 1.0, 0.0], [1.0, 0.0, 2.0], [-3.0, 0.0, 0.0]]
"#;
        let lp = load_problem_str(text).unwrap();
        // f = 2 x1 + x2^2 - 3; at (1,2): 2 + 4 - 3 = 3, grad (2, 4).
        assert_eq!(lp.problem.eval(&[1.0, 2.0]), vec![3.0]);
        let j = lp.problem.jacobian(&[1.0, 2.0], 1e-7);
        assert!((j[(0, 0)] - 2.0).abs() < 1e-12 && (j[(0, 1)] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_polynomial_bad_exponent_rejected() {
        let text = r#"
format = 1
kind = "scalar-polynomial"
n = 1
m = 1

[payload]
terms = [[2.0, 1.5]]
"#;
        let err = load_problem_str(text).unwrap_err();
        assert!(err.to_string().contains("exponents"), "{err}");
    }

    #[test]
    fn negative_constant_rejected() {
        let text = QUAD_1D.replace("l = 1.0", "l = -1.0");
        let err = load_problem_str(&text).unwrap_err();
        assert!(err.to_string().contains("constants.l"), "{err}");
    }

    #[test]
    fn x0_length_checked() {
        let text = QUAD_1D.replace("kind = \"quadratic\"", "kind = \"quadratic\"\nx0 = [0.0, 0.0]");
        let err = load_problem_str(&text).unwrap_err();
        assert!(err.to_string().contains("x0"), "{err}");
    }
}
